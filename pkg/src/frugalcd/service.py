"""HTTP labeling service for human sessions.

Thin JSON layer over the session state machine. Sessions are held in
memory behind per-session locks and persisted as append-only JSONL event
logs (created, labeled, advanced); on restart a session is replayed from
its log on first access, so a service can be killed and restarted
between rounds without losing a label. All handlers are synchronous and
the state machine is immutable, so the lock only guards the swap of one
session pointer.

Error bodies are {"code": str, "message": str, "field": str | null}.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from dataclasses import dataclass, field, replace

from fastapi import FastAPI
from fastapi.responses import FileResponse, JSONResponse, Response

from .data import generate_synthetic, load_dataset, parse_synthetic_spec
from .errors import (DataFormatError, DataIOError, FrugalError,
                     InvalidArgument, InvalidState)
from .session import (SessionState, derive_seed, init_session,
                      stratified_split, submit_labels)
from .svm import decision_scores, normalize_scores
from .types import Dataset, Hyperparams, LabelVector

_HP_FIELDS = ("alpha", "beta", "gamma", "n_clusters", "display_size",
              "n_rounds", "fp_tol", "fp_max_iter", "score_clamp",
              "mass_floor", "seed", "svm_reg", "svm_epochs",
              "solve_unlabeled_only")


def _error(status: int, code: str, message: str,
           field_name: str | None = None) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message,
                                 "field": field_name})


@dataclass
class SessionRuntime:
    """One live session: immutable state plus its lock and event log."""

    state: SessionState
    lock: threading.Lock
    log_path: str | None
    created_event: dict
    sample_ids: tuple[str, ...] = field(default_factory=tuple)


class ServiceCore:
    """Session registry shared by the HTTP handlers."""

    def __init__(self, state_dir: str | None = None):
        self.state_dir = state_dir
        if state_dir:
            os.makedirs(state_dir, exist_ok=True)
        self.sessions: dict[str, SessionRuntime] = {}
        self.registry_lock = threading.Lock()
        # sample id -> (ref_path, test_path); filled as datasets load.
        self.patch_files: dict[str, tuple[str, str]] = {}

    # -- dataset resolution ------------------------------------------------

    def _resolve_dataset(self, spec: dict
                         ) -> tuple[Dataset, LabelVector | None]:
        if not isinstance(spec, dict):
            raise InvalidArgument("dataset must be an object")
        if "synthetic" in spec:
            ds, labels = generate_synthetic(
                parse_synthetic_spec(str(spec["synthetic"])))
            return ds, labels
        if "path" in spec:
            ds, labels, _ = load_dataset(str(spec["path"]))
            if ds.patch_refs:
                for sid, (ref, test) in zip(ds.ids, ds.patch_refs):
                    self.patch_files[sid] = (ref, test)
            return ds, labels
        raise InvalidArgument("dataset needs a 'path' or 'synthetic' key")

    # -- persistence -------------------------------------------------------

    def _append_event(self, rt: SessionRuntime, event: dict) -> None:
        if rt.log_path is None:
            return
        line = json.dumps(event, sort_keys=True)
        with open(rt.log_path, "a") as fh:
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _advanced_event(self, state: SessionState,
                        ids: tuple[str, ...]) -> dict:
        return {"event": "advanced", "t": state.t,
                "finished": state.finished,
                "pending": [ids[i] for i in state.pending]}

    # -- session lifecycle -------------------------------------------------

    def create_session(self, body: dict) -> tuple[str, SessionRuntime]:
        dataset_spec = body.get("dataset")
        if dataset_spec is None:
            raise InvalidArgument("request body needs a 'dataset' object")
        strategy = body.get("strategy", "proposed")
        with_eval = bool(body.get("with_eval", True))

        hp_spec = body.get("hp") or {}
        if not isinstance(hp_spec, dict):
            raise InvalidArgument("hp must be an object")
        if "seed" in body:
            hp_spec = {**hp_spec, "seed": body["seed"]}
        hp = _build_hp(hp_spec)

        state, ids = self._build_state(dataset_spec, hp, strategy, with_eval)
        session_id = uuid.uuid4().hex
        created = {"event": "created", "session": session_id,
                   "dataset": dataset_spec, "strategy": str(strategy),
                   "hp": hp_spec, "with_eval": with_eval}
        log_path = (os.path.join(self.state_dir, f"{session_id}.jsonl")
                    if self.state_dir else None)
        rt = SessionRuntime(state=state, lock=threading.Lock(),
                            log_path=log_path, created_event=created,
                            sample_ids=ids)
        with self.registry_lock:
            self.sessions[session_id] = rt
        self._append_event(rt, created)
        self._append_event(rt, self._advanced_event(state, ids))
        return session_id, rt

    def _build_state(self, dataset_spec: dict, hp: Hyperparams,
                     strategy, with_eval: bool
                     ) -> tuple[SessionState, tuple[str, ...]]:
        dataset, labels = self._resolve_dataset(dataset_spec)
        eval_X = eval_y = None
        pool = dataset
        if with_eval:
            if labels is None or not labels.labeled_mask.all():
                raise InvalidArgument(
                    "with_eval requires a fully labeled dataset")
            train_idx, eval_idx = stratified_split(
                labels, 0.5, seed=derive_seed(hp.seed, "split"))
            pool = dataset.select(train_idx)
            eval_X = dataset.features[eval_idx]
            eval_y = labels.values[eval_idx]
        state = init_session(pool, hp, strategy, oracle_kind="human",
                             eval_features=eval_X, eval_labels=eval_y)
        return state, pool.ids

    def get_runtime(self, session_id: str) -> SessionRuntime | None:
        with self.registry_lock:
            rt = self.sessions.get(session_id)
        if rt is not None:
            return rt
        return self._replay(session_id)

    def _replay(self, session_id: str) -> SessionRuntime | None:
        """Rebuild a session from its event log after a restart."""
        if not self.state_dir or not _SESSION_ID_OK(session_id):
            return None
        path = os.path.join(self.state_dir, f"{session_id}.jsonl")
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
        if not events or events[0].get("event") != "created":
            raise DataFormatError(f"event log {path} does not start with a "
                                  "created event")
        created = events[0]
        hp = _build_hp(created.get("hp") or {})
        state, ids = self._build_state(created["dataset"], hp,
                                       created.get("strategy", "proposed"),
                                       bool(created.get("with_eval", True)))
        index_of = {sid: i for i, sid in enumerate(ids)}
        last_advanced = None
        for event in events[1:]:
            kind = event.get("event")
            if kind == "labeled":
                answers = {index_of[sid]: int(v)
                           for sid, v in event["answers"].items()}
                state = submit_labels(state, answers)
            elif kind == "advanced":
                last_advanced = event
        if last_advanced is not None:
            expected = self._advanced_event(state, ids)
            got = {k: last_advanced.get(k) for k in expected}
            if got != expected:
                raise DataFormatError(
                    f"event log {path} does not replay to its recorded "
                    f"state (recorded {got}, replayed {expected})")
        rt = SessionRuntime(state=state, lock=threading.Lock(),
                            log_path=path, created_event=created,
                            sample_ids=ids)
        with self.registry_lock:
            # Another thread may have replayed concurrently; keep the first.
            existing = self.sessions.get(session_id)
            if existing is not None:
                return existing
            self.sessions[session_id] = rt
        return rt

    # -- views ---------------------------------------------------------

    def display_payload(self, rt: SessionRuntime) -> dict:
        state = rt.state
        ids = rt.sample_ids
        scores = None
        if state.model is not None:
            raw = decision_scores(state.model, state.dataset)
            scores = normalize_scores(raw, state.hp.score_clamp)
        items = []
        for i in state.pending:
            sid = ids[i]
            has_patch = sid in self.patch_files
            items.append({
                "sample_id": sid,
                "ref_image": f"/patches/{sid}/ref" if has_patch else None,
                "test_image": f"/patches/{sid}/test" if has_patch else None,
                "score": None if scores is None else float(scores[i]),
            })
        return {"iteration": state.t, "strategy": state.strategy.value,
                "display_size": state.hp.display_size, "items": items}

    def metrics_payload(self, rt: SessionRuntime) -> dict:
        state = rt.state
        records = [{
            "iteration": r.iteration,
            "n_labeled": r.n_labeled,
            "sampling_rate_pct": r.sampling_rate_pct,
            "eer": r.eer,
            "fp_iterations": r.fp_iterations,
            "objective_final": r.objective_final,
            "strategy": r.strategy,
        } for r in state.metrics]
        return {"session_finished": state.finished,
                "iteration": state.t,
                "n_rounds": state.hp.n_rounds,
                "n_pool": state.dataset.n,
                "strategy": state.strategy.value,
                "records": records}


def _SESSION_ID_OK(session_id: str) -> bool:
    return session_id.isalnum() and len(session_id) <= 64


def _build_hp(spec: dict) -> Hyperparams:
    """Hyperparams from a JSON object, reporting the offending field."""
    unknown = sorted(set(spec) - set(_HP_FIELDS))
    if unknown:
        raise _FieldError(unknown[0], f"unknown hyperparameter "
                                      f"{unknown[0]!r}")
    base = Hyperparams()
    merged = {}
    for key, value in spec.items():
        try:
            merged[key] = value
            replace(base, **{key: value})
        except (InvalidArgument, TypeError) as exc:
            raise _FieldError(key, str(exc)) from None
    try:
        return Hyperparams(**merged)
    except InvalidArgument as exc:
        raise _FieldError(None, str(exc)) from None


class _FieldError(InvalidArgument):
    def __init__(self, field_name: str | None, message: str):
        super().__init__(message)
        self.field_name = field_name


def create_app(state_dir: str | None = None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the FastAPI app; state_dir enables event-log persistence."""
    core = ServiceCore(state_dir=state_dir)
    app = FastAPI(title="frugalcd labeling service")
    app.state.core = core

    @app.exception_handler(DataFormatError)
    def _corrupt_state(request, exc: DataFormatError):
        # a session log that fails replay is a server-side integrity
        # problem, not a client mistake
        return _error(500, "corrupt-state", str(exc))

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        try:
            session_id, rt = core.create_session(body)
        except _FieldError as exc:
            return _error(400, "invalid-hyperparameter", str(exc),
                          exc.field_name)
        except (DataIOError, FileNotFoundError) as exc:
            return _error(404, "unknown-dataset", str(exc))
        except DataFormatError as exc:
            return _error(400, "dataset-format", str(exc))
        except (InvalidArgument, InvalidState) as exc:
            return _error(400, "invalid-request", str(exc))
        payload = core.display_payload(rt)
        return {"session_id": session_id, "iteration": rt.state.t,
                "display": f"/sessions/{session_id}/display",
                "display_size": payload["display_size"]}

    @app.get("/sessions/{session_id}/display")
    def get_display(session_id: str):
        rt = core.get_runtime(session_id)
        if rt is None:
            return _error(404, "unknown-session",
                          f"no session {session_id}")
        if rt.state.finished:
            return _error(409, "session-finished",
                          "the labeling budget is exhausted; "
                          "no display is pending")
        return core.display_payload(rt)

    @app.post("/sessions/{session_id}/labels")
    def post_labels(session_id: str, body: dict):
        rt = core.get_runtime(session_id)
        if rt is None:
            return _error(404, "unknown-session",
                          f"no session {session_id}")
        answers = body.get("answers")
        if not isinstance(answers, dict) or not answers:
            return _error(422, "bad-answers",
                          "body needs an 'answers' object of "
                          "sample_id -> label", "answers")

        with rt.lock:
            state = rt.state
            ids = rt.sample_ids
            index_of = {sid: i for i, sid in enumerate(ids)}

            submitted = set(answers)
            if state.history:
                last_ids = {ids[i] for i in state.history[-1][0]}
                if submitted == last_ids:
                    return _error(409, "duplicate-submit",
                                  "these samples were already labeled in "
                                  f"iteration {state.t}")
            if state.finished:
                return _error(409, "session-finished",
                              "the labeling budget is exhausted")

            pending_ids = {ids[i] for i in state.pending}
            unknown = sorted(submitted - pending_ids)
            if unknown:
                return _error(422, "unknown-sample",
                              f"sample {unknown[0]!r} is not in the "
                              "pending display", unknown[0])
            missing = sorted(pending_ids - submitted)
            if missing:
                return _error(422, "missing-label",
                              f"no label submitted for {missing[0]!r}",
                              missing[0])
            bad = sorted(sid for sid, v in answers.items()
                         if not isinstance(v, int) or v not in (-1, 1))
            if bad:
                return _error(422, "bad-label",
                              f"label for {bad[0]!r} must be +1 or -1",
                              bad[0])

            new_state = submit_labels(
                state, {index_of[sid]: int(v) for sid, v in answers.items()})
            rt.state = new_state
            core._append_event(rt, {"event": "labeled",
                                    "iteration": new_state.t,
                                    "answers": {str(k): int(v)
                                                for k, v in answers.items()}})
            core._append_event(rt, core._advanced_event(new_state, ids))

        record = new_state.metrics[-1]
        return {"iteration": new_state.t,
                "finished": new_state.finished,
                "eer": record.eer,
                "sampling_rate_pct": record.sampling_rate_pct}

    @app.get("/sessions/{session_id}/metrics")
    def get_metrics(session_id: str):
        rt = core.get_runtime(session_id)
        if rt is None:
            return _error(404, "unknown-session",
                          f"no session {session_id}")
        return core.metrics_payload(rt)

    @app.get("/patches/{sample_id}/{side}")
    def get_patch(sample_id: str, side: str):
        if side not in ("ref", "test"):
            return _error(404, "unknown-side",
                          "side must be 'ref' or 'test'")
        pair = core.patch_files.get(sample_id)
        if pair is None:
            return _error(404, "unknown-sample",
                          f"no patches for {sample_id!r}")
        path = pair[0] if side == "ref" else pair[1]
        if not os.path.exists(path):
            return _error(404, "missing-file", f"{path} has gone away")
        return FileResponse(path, media_type="image/png")

    if ui_dir and os.path.isdir(ui_dir):
        from fastapi.staticfiles import StaticFiles
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True),
                  name="ui")

    @app.get("/healthz")
    def healthz():
        return Response(content="ok", media_type="text/plain")

    return app
