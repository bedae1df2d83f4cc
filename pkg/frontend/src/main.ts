import { createClient } from "./api.js";
import { createApp } from "./app.js";
import type { CreateSessionRequest, StrategyName } from "./types.js";

/** Form wiring for the static page; everything else lives in app.ts. */

function readRequest(form: HTMLFormElement): CreateSessionRequest {
  const data = new FormData(form);
  const kind = String(data.get("dataset-kind") ?? "synthetic");
  const spec = String(data.get("dataset-spec") ?? "").trim();
  const dataset = kind === "path" ? { path: spec } : { synthetic: spec };
  const request: CreateSessionRequest = {
    dataset,
    strategy: String(data.get("strategy") ?? "proposed") as StrategyName,
    with_eval: data.get("with-eval") === "on",
  };
  const seed = String(data.get("seed") ?? "").trim();
  if (seed !== "") {
    request.seed = Number(seed);
  }
  const rounds = String(data.get("rounds") ?? "").trim();
  const displaySize = String(data.get("display-size") ?? "").trim();
  const hp: Record<string, number> = {};
  if (rounds !== "") {
    hp.n_rounds = Number(rounds);
  }
  if (displaySize !== "") {
    hp.display_size = Number(displaySize);
  }
  if (Object.keys(hp).length > 0) {
    request.hp = hp;
  }
  return request;
}

function boot(): void {
  const form = document.getElementById("session-form") as HTMLFormElement | null;
  const appRoot = document.getElementById("app");
  if (!form || !appRoot) {
    return;
  }
  const client = createClient({});
  const app = createApp(appRoot, client, {});

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void app.start(readRequest(form));
  });
}

document.addEventListener("DOMContentLoaded", boot);
