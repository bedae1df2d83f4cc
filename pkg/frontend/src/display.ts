import type { Answers, DisplayPayload, Label } from "./types.js";

/**
 * Card grid for one display: B patch pairs awaiting change/no-change
 * answers.
 *
 * Labeling rules the DOM enforces:
 *  - submit stays disabled until every card has an answer;
 *  - answers exist only for rendered sample ids, so the submitted body
 *    can never contain a fabricated label;
 *  - patches render at a fixed zoom because the raw crops are a few
 *    dozen pixels across and unreadable at natural size.
 *
 * Keyboard: 1 = change, 0 = no-change (both advance focus), arrow keys
 * move between cards.
 */

export const PATCH_ZOOM = 4;
export const DEFAULT_PATCH_EDGE = 30;
const GRID_COLUMNS = 4;

export interface DisplayOptions {
  /** Origin prefix for the server-relative patch image paths. */
  imageBase?: string;
  onSubmit?: (answers: Answers) => void;
  patchEdge?: number;
}

export interface DisplayController {
  readonly payload: DisplayPayload;
  cardIds(): string[];
  setChoice(sampleId: string, label: Label): void;
  choices(): Answers;
  allAnswered(): boolean;
  focusedIndex(): number;
  focusCard(index: number): void;
  setFlicker(on: boolean): void;
  flickerOn(): boolean;
  /** Swap which side of every pair is visible; the timer calls this. */
  flickerTick(): void;
  setHints(on: boolean): void;
  hintsOn(): boolean;
  flagCard(sampleId: string): void;
  clearFlags(): void;
  submitButton(): HTMLButtonElement;
  destroy(): void;
}

const FLICKER_INTERVAL_MS = 350;

function patchFigure(
  side: "ref" | "test",
  url: string | null,
  edge: number,
  imageBase: string,
): HTMLElement {
  const figure = document.createElement("figure");
  figure.className = `patch ${side}`;
  if (url === null) {
    const box = document.createElement("div");
    box.className = "placeholder";
    box.style.width = `${edge * PATCH_ZOOM}px`;
    box.style.height = `${edge * PATCH_ZOOM}px`;
    box.textContent = "no imagery";
    figure.appendChild(box);
  } else {
    const img = document.createElement("img");
    img.src = imageBase + url;
    img.alt = `${side} patch`;
    img.width = edge * PATCH_ZOOM;
    img.height = edge * PATCH_ZOOM;
    img.style.imageRendering = "pixelated";
    figure.appendChild(img);
  }
  const caption = document.createElement("figcaption");
  caption.textContent = side;
  figure.appendChild(caption);
  return figure;
}

export function renderDisplay(
  root: HTMLElement,
  payload: DisplayPayload,
  options: DisplayOptions = {},
): DisplayController {
  const imageBase = options.imageBase ?? "";
  const edge = options.patchEdge ?? DEFAULT_PATCH_EDGE;
  const answers = new Map<string, Label>();
  let focused = 0;
  let flicker = false;
  let hints = false;
  let flickerTimer: ReturnType<typeof setInterval> | null = null;

  root.textContent = "";
  const section = document.createElement("section");
  section.className = "display";

  const header = document.createElement("header");
  header.className = "display-header";
  const title = document.createElement("span");
  title.className = "iteration";
  title.textContent = `Round ${payload.iteration + 1}`;
  const strategy = document.createElement("span");
  strategy.className = "strategy";
  strategy.textContent = payload.strategy;
  header.appendChild(title);
  header.appendChild(strategy);

  const flickerToggle = document.createElement("input");
  flickerToggle.type = "checkbox";
  flickerToggle.className = "flicker-toggle";
  const flickerLabel = document.createElement("label");
  flickerLabel.appendChild(flickerToggle);
  flickerLabel.appendChild(document.createTextNode(" flicker"));
  header.appendChild(flickerLabel);

  // score hints default to off so the model's opinion cannot anchor
  // the human's answer
  const hintsToggle = document.createElement("input");
  hintsToggle.type = "checkbox";
  hintsToggle.className = "hints-toggle";
  const hintsLabel = document.createElement("label");
  hintsLabel.appendChild(hintsToggle);
  hintsLabel.appendChild(document.createTextNode(" score hints"));
  header.appendChild(hintsLabel);

  const counter = document.createElement("div");
  counter.className = "answered-count";

  const grid = document.createElement("div");
  grid.className = "card-grid";
  grid.dataset.phase = "ref";

  const cards: HTMLElement[] = [];
  for (const item of payload.items) {
    const card = document.createElement("div");
    card.className = "card";
    card.dataset.sampleId = item.sample_id;
    card.tabIndex = 0;

    const pair = document.createElement("div");
    pair.className = "patch-pair";
    pair.appendChild(patchFigure("ref", item.ref_image, edge, imageBase));
    pair.appendChild(patchFigure("test", item.test_image, edge, imageBase));
    card.appendChild(pair);

    if (item.score !== null) {
      const bar = document.createElement("div");
      bar.className = "hint-bar hidden";
      bar.title = `model score ${item.score.toFixed(3)}`;
      const fill = document.createElement("span");
      const pct = Math.max(0, Math.min(1, item.score)) * 100;
      fill.style.width = `${pct}%`;
      bar.appendChild(fill);
      card.appendChild(bar);
    }

    const row = document.createElement("div");
    row.className = "choice-row";
    const change = document.createElement("button");
    change.type = "button";
    change.className = "choice change";
    change.textContent = "change";
    const noChange = document.createElement("button");
    noChange.type = "button";
    noChange.className = "choice no-change";
    noChange.textContent = "no change";
    row.appendChild(change);
    row.appendChild(noChange);
    card.appendChild(row);

    change.addEventListener("click", () => setChoice(item.sample_id, 1));
    noChange.addEventListener("click", () => setChoice(item.sample_id, -1));
    card.addEventListener("focus", () => {
      focused = cards.indexOf(card);
      refreshFocus();
    });

    cards.push(card);
    grid.appendChild(card);
  }

  const submitRow = document.createElement("div");
  submitRow.className = "submit-row";
  const submit = document.createElement("button");
  submit.type = "button";
  submit.className = "submit";
  submit.textContent = "submit labels";
  submit.disabled = true;
  submitRow.appendChild(submit);

  section.appendChild(header);
  section.appendChild(counter);
  section.appendChild(grid);
  section.appendChild(submitRow);
  root.appendChild(section);

  function refreshSubmit(): void {
    const done = answers.size;
    counter.textContent = `${done} / ${payload.items.length} answered`;
    submit.disabled = done !== payload.items.length;
  }

  function refreshFocus(): void {
    cards.forEach((card, i) => card.classList.toggle("focused", i === focused));
  }

  function setChoice(sampleId: string, label: Label): void {
    const card = cards.find((c) => c.dataset.sampleId === sampleId);
    if (!card) {
      return;
    }
    answers.set(sampleId, label);
    card.dataset.choice = String(label);
    card.classList.remove("flagged");
    const change = card.querySelector(".choice.change") as HTMLButtonElement;
    const noChange = card.querySelector(".choice.no-change") as HTMLButtonElement;
    change.classList.toggle("chosen", label === 1);
    noChange.classList.toggle("chosen", label === -1);
    refreshSubmit();
  }

  function focusCard(index: number): void {
    if (cards.length === 0) {
      return;
    }
    focused = Math.max(0, Math.min(cards.length - 1, index));
    refreshFocus();
    cards[focused].focus();
  }

  function applyFlicker(): void {
    grid.classList.toggle("flicker-mode", flicker);
    if (flicker && flickerTimer === null) {
      flickerTimer = setInterval(tick, FLICKER_INTERVAL_MS);
    } else if (!flicker && flickerTimer !== null) {
      clearInterval(flickerTimer);
      flickerTimer = null;
      grid.dataset.phase = "ref";
    }
  }

  function tick(): void {
    grid.dataset.phase = grid.dataset.phase === "ref" ? "test" : "ref";
  }

  flickerToggle.addEventListener("change", () => {
    flicker = flickerToggle.checked;
    applyFlicker();
  });
  hintsToggle.addEventListener("change", () => {
    hints = hintsToggle.checked;
    grid.classList.toggle("show-hints", hints);
    for (const bar of Array.from(grid.querySelectorAll(".hint-bar"))) {
      bar.classList.toggle("hidden", !hints);
    }
  });

  section.addEventListener("keydown", (event: KeyboardEvent) => {
    switch (event.key) {
      case "1":
        choiceByKey(1);
        break;
      case "0":
        choiceByKey(-1);
        break;
      case "ArrowRight":
        focusCard(focused + 1);
        break;
      case "ArrowLeft":
        focusCard(focused - 1);
        break;
      case "ArrowDown":
        focusCard(focused + GRID_COLUMNS);
        break;
      case "ArrowUp":
        focusCard(focused - GRID_COLUMNS);
        break;
      default:
        return;
    }
    event.preventDefault();
  });

  function choiceByKey(label: Label): void {
    const card = cards[focused];
    if (!card) {
      return;
    }
    setChoice(card.dataset.sampleId as string, label);
    if (focused < cards.length - 1) {
      focusCard(focused + 1);
    }
  }

  submit.addEventListener("click", () => {
    if (submit.disabled || answers.size !== payload.items.length) {
      return;
    }
    options.onSubmit?.(controllerChoices());
  });

  function controllerChoices(): Answers {
    const out: Answers = {};
    for (const [sid, label] of answers) {
      out[sid] = label;
    }
    return out;
  }

  refreshSubmit();
  refreshFocus();

  return {
    payload,
    cardIds: () => cards.map((c) => c.dataset.sampleId as string),
    setChoice,
    choices: controllerChoices,
    allAnswered: () => answers.size === payload.items.length,
    focusedIndex: () => focused,
    focusCard,
    setFlicker(on: boolean): void {
      flicker = on;
      flickerToggle.checked = on;
      applyFlicker();
    },
    flickerOn: () => flicker,
    flickerTick: tick,
    setHints(on: boolean): void {
      hintsToggle.checked = on;
      hintsToggle.dispatchEvent(new Event("change"));
    },
    hintsOn: () => hints,
    flagCard(sampleId: string): void {
      const card = cards.find((c) => c.dataset.sampleId === sampleId);
      card?.classList.add("flagged");
    },
    clearFlags(): void {
      cards.forEach((c) => c.classList.remove("flagged"));
    },
    submitButton: () => submit,
    destroy(): void {
      if (flickerTimer !== null) {
        clearInterval(flickerTimer);
        flickerTimer = null;
      }
    },
  };
}
