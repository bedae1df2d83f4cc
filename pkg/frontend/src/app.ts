import { ServiceError, type ServiceClient } from "./api.js";
import { renderDashboard, type DashboardController } from "./dashboard.js";
import { renderDisplay, type DisplayController } from "./display.js";
import type { Answers, CreateSessionRequest } from "./types.js";

/**
 * Session driver: owns one live session, the banner area, and the
 * display/dashboard regions.
 *
 * All mutations pass through a single gate so a double click or an
 * impatient retry can never race two label posts. If a post times out
 * on the wire after the server applied it, the retry earns a
 * duplicate-submit conflict, which the driver treats as confirmation
 * and moves on. Labels are therefore applied at most once no matter
 * how the network behaves.
 */

export class MutationGate {
  private busy = false;

  isBusy(): boolean {
    return this.busy;
  }

  /** Run fn unless a mutation is already in flight; null means dropped. */
  async tryRun<T>(fn: () => Promise<T>): Promise<T | null> {
    if (this.busy) {
      return null;
    }
    this.busy = true;
    try {
      return await fn();
    } finally {
      this.busy = false;
    }
  }
}

export type BannerKind = "info" | "error" | "terminal";

export interface AppOptions {
  /** Prefix for patch image urls; empty when served from the same origin. */
  imageBase?: string;
}

export interface AppController {
  start(request: CreateSessionRequest): Promise<void>;
  resume(sessionId: string): Promise<void>;
  /** Submit the current display's answers; same path as the button. */
  submit(): Promise<void>;
  sessionId(): string | null;
  display(): DisplayController | null;
  dashboard(): DashboardController | null;
  bannerTexts(): string[];
  finished(): boolean;
}

export function createApp(
  root: HTMLElement,
  client: ServiceClient,
  options: AppOptions = {},
): AppController {
  const gate = new MutationGate();
  let session: string | null = null;
  let displayCtl: DisplayController | null = null;
  let dashboardCtl: DashboardController | null = null;
  let done = false;

  root.textContent = "";
  const banners = document.createElement("div");
  banners.className = "banners";
  const displayRegion = document.createElement("div");
  displayRegion.className = "display-region";
  const dashboardRegion = document.createElement("div");
  dashboardRegion.className = "dashboard-region";
  root.appendChild(banners);
  root.appendChild(displayRegion);
  root.appendChild(dashboardRegion);

  function clearBanners(): void {
    banners.textContent = "";
  }

  function showBanner(kind: BannerKind, text: string, retry?: () => void): void {
    const el = document.createElement("div");
    el.className = `banner ${kind}`;
    el.appendChild(document.createTextNode(text));
    if (retry) {
      const button = document.createElement("button");
      button.type = "button";
      button.className = "retry";
      button.textContent = "retry";
      button.addEventListener("click", () => {
        clearBanners();
        retry();
      });
      el.appendChild(button);
    }
    banners.appendChild(el);
  }

  function markFinished(): void {
    done = true;
    displayCtl?.destroy();
    displayCtl = null;
    displayRegion.textContent = "";
    const note = document.createElement("div");
    note.className = "done-note";
    note.textContent = "All rounds labeled.";
    displayRegion.appendChild(note);
    clearBanners();
    showBanner("terminal", "budget exhausted");
  }

  async function refreshMetrics(): Promise<void> {
    if (session === null) {
      return;
    }
    const metrics = await client.getMetrics(session);
    dashboardCtl = renderDashboard(dashboardRegion, metrics);
  }

  async function refreshDisplay(): Promise<void> {
    if (session === null) {
      return;
    }
    try {
      const payload = await client.getDisplay(session);
      displayCtl?.destroy();
      displayCtl = renderDisplay(displayRegion, payload, {
        imageBase: options.imageBase ?? "",
        onSubmit: () => {
          void submit();
        },
      });
    } catch (error) {
      if (error instanceof ServiceError && error.code === "session-finished") {
        markFinished();
        return;
      }
      throw error;
    }
  }

  function surface(error: unknown, retry?: () => void): void {
    if (error instanceof ServiceError) {
      if (error.code === "session-finished") {
        markFinished();
        return;
      }
      showBanner("error", `${error.code}: ${error.message}`);
      return;
    }
    const text = error instanceof Error ? error.message : String(error);
    showBanner("error", `request failed: ${text}`, retry);
  }

  async function submit(): Promise<void> {
    if (session === null || displayCtl === null || done) {
      return;
    }
    if (!displayCtl.allAnswered()) {
      // the button is disabled in this state; guard the programmatic path
      showBanner("error", "answer every card before submitting");
      return;
    }
    const sid = session;
    const answers: Answers = displayCtl.choices();
    const button = displayCtl.submitButton();
    await gate.tryRun(async () => {
      button.disabled = true;
      clearBanners();
      try {
        const result = await client.postLabels(sid, answers);
        await refreshMetrics();
        if (result.finished) {
          markFinished();
        } else {
          await refreshDisplay();
        }
      } catch (error) {
        if (error instanceof ServiceError && error.code === "duplicate-submit") {
          // the earlier attempt landed; reconcile instead of reposting
          await refreshMetrics();
          await refreshDisplay();
          return;
        }
        button.disabled = false;
        if (
          error instanceof ServiceError &&
          error.status === 422 &&
          error.field !== null
        ) {
          displayCtl?.flagCard(error.field);
        }
        surface(error, () => {
          void submit();
        });
      }
    });
  }

  async function start(request: CreateSessionRequest): Promise<void> {
    const created = await gate.tryRun(() => client.createSession(request));
    if (created === null) {
      return;
    }
    displayCtl?.destroy();
    displayCtl = null;
    done = false;
    session = created.session_id;
    clearBanners();
    await refreshDisplay();
    await refreshMetrics();
  }

  async function resume(sessionId: string): Promise<void> {
    displayCtl?.destroy();
    displayCtl = null;
    done = false;
    session = sessionId;
    clearBanners();
    try {
      await refreshDisplay();
      await refreshMetrics();
    } catch (error) {
      surface(error);
    }
  }

  return {
    start,
    resume,
    submit,
    sessionId: () => session,
    display: () => displayCtl,
    dashboard: () => dashboardCtl,
    bannerTexts: () =>
      Array.from(banners.querySelectorAll(".banner")).map(
        (el) => el.textContent ?? "",
      ),
    finished: () => done,
  };
}
