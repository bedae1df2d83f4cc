import { beforeEach, describe, expect, it } from "vitest";
import { createClient } from "../src/api.js";
import { createApp, type AppController } from "../src/app.js";
import type { Answers } from "../src/types.js";
import { MockService } from "./mock_service.js";

/** Let the submit/fetch/render promise chains run to completion. */
async function settle(): Promise<void> {
  for (let i = 0; i < 25; i++) {
    await new Promise((resolve) => setTimeout(resolve, 0));
  }
}

function pressKey(root: HTMLElement, name: string): void {
  root.querySelector("section.display")!.dispatchEvent(
    new KeyboardEvent("keydown", { key: name, bubbles: true }),
  );
}

function buildApp(mock: MockService): { root: HTMLElement; app: AppController } {
  const client = createClient({ fetchFn: mock.fetchFn });
  const root = document.createElement("div");
  document.body.appendChild(root);
  const app = createApp(root, client);
  return { root, app };
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("three-iteration session against a mock service", () => {
  it("renders each display, posts exactly the chosen labels, and mirrors the metrics", async () => {
    const mock = new MockService(3, 16, 220);
    const { root, app } = buildApp(mock);
    await app.start({
      dataset: { synthetic: "n=220,d=8,positive_rate=0.1,seed=1" },
      strategy: "proposed",
      hp: { n_rounds: 3, display_size: 16 },
    });

    const chosen: Answers[] = [];

    // round 1: buttons; hold back the 16th answer to prove the block
    let ctl = app.display()!;
    expect(ctl.payload.iteration).toBe(0);
    expect(ctl.cardIds()).toEqual(mock.roundIds(0));
    expect(root.querySelectorAll(".card").length).toBe(16);
    expect(root.querySelectorAll(".hint-bar").length).toBe(0);

    const round1: Answers = {};
    const ids1 = ctl.cardIds();
    ids1.slice(0, 15).forEach((sid, i) => {
      const label = i % 2 === 0 ? 1 : -1;
      ctl.setChoice(sid, label);
      round1[sid] = label;
    });
    expect(ctl.submitButton().disabled).toBe(true);
    ctl.submitButton().click();
    await settle();
    expect(mock.labelPosts().length).toBe(0);
    await app.submit();
    expect(mock.labelPosts().length).toBe(0);
    expect(
      app.bannerTexts().some((t) => t.includes("answer every card")),
    ).toBe(true);

    ctl.setChoice(ids1[15], 1);
    round1[ids1[15]] = 1;
    chosen.push(round1);
    expect(ctl.submitButton().disabled).toBe(false);
    ctl.submitButton().click();
    await settle();

    // round 2: keyboard only, scores now present but hidden by default
    ctl = app.display()!;
    expect(ctl.payload.iteration).toBe(1);
    expect(ctl.cardIds()).toEqual(mock.roundIds(1));
    expect(root.querySelectorAll(".hint-bar").length).toBe(16);
    expect(root.querySelectorAll(".hint-bar.hidden").length).toBe(16);

    const round2: Answers = {};
    ctl.focusCard(0);
    ctl.cardIds().forEach((sid, i) => {
      const label = i % 3 === 0 ? -1 : 1;
      pressKey(root, label === 1 ? "1" : "0");
      round2[sid] = label;
    });
    chosen.push(round2);
    expect(ctl.allAnswered()).toBe(true);
    ctl.submitButton().click();
    await settle();

    // round 3: controller calls, all no-change except the first card
    ctl = app.display()!;
    expect(ctl.payload.iteration).toBe(2);
    expect(ctl.cardIds()).toEqual(mock.roundIds(2));
    const round3: Answers = {};
    ctl.cardIds().forEach((sid, i) => {
      const label = i === 0 ? 1 : -1;
      ctl.setChoice(sid, label);
      round3[sid] = label;
    });
    chosen.push(round3);
    ctl.submitButton().click();
    await settle();

    // finished: terminal banner, no pending display
    expect(app.finished()).toBe(true);
    expect(app.display()).toBeNull();
    expect(app.bannerTexts()).toContain("budget exhausted");
    expect(root.querySelector(".done-note")!.textContent).toBe("All rounds labeled.");

    // the wire saw exactly the user's choices for exactly the pending ids
    const posts = mock.labelPosts();
    expect(posts.length).toBe(3);
    posts.forEach((post, i) => {
      expect(post.body).toEqual({ answers: chosen[i] });
    });
    expect(mock.applied).toEqual(chosen);

    // the dashboard mirrors the service's metrics without rederiving them
    const dashboard = app.dashboard()!;
    expect(dashboard.metrics).toEqual(mock.metricsPayload());
    const records = mock.metricsPayload().records;
    expect(dashboard.series()).toEqual({
      sampPct: records.map((r) => r.sampling_rate_pct),
      eer: records.map((r) => r.eer),
      fpIterations: records.map((r) => r.fp_iterations),
    });
    expect(dashboard.series().sampPct.length).toBe(3);
    expect(root.querySelector(".dashboard .budget")!.textContent).toBe(
      "budget exhausted",
    );
  });

  it("treats a double click as a single submission", async () => {
    const mock = new MockService(2, 4);
    const { app } = buildApp(mock);
    await app.start({ dataset: { synthetic: "n=40,d=4,seed=2" } });

    const ctl = app.display()!;
    for (const sid of ctl.cardIds()) {
      ctl.setChoice(sid, 1);
    }
    ctl.submitButton().click();
    ctl.submitButton().click();
    await settle();

    expect(mock.labelPosts().length).toBe(1);
    expect(mock.applied.length).toBe(1);
    expect(app.display()!.payload.iteration).toBe(1);
  });
});

describe("failure handling", () => {
  it("retries a lost reply and accepts the duplicate conflict as delivery", async () => {
    const mock = new MockService(3, 4);
    const { root, app } = buildApp(mock);
    await app.start({ dataset: { synthetic: "n=40,d=4,seed=3" } });

    const ctl = app.display()!;
    for (const sid of ctl.cardIds()) {
      ctl.setChoice(sid, -1);
    }
    mock.dropNextReply = true;
    ctl.submitButton().click();
    await settle();

    // the post was applied server side but the reply never arrived
    expect(mock.applied.length).toBe(1);
    expect(app.bannerTexts().some((t) => t.includes("request failed"))).toBe(true);
    const retry = root.querySelector(".banner .retry") as HTMLButtonElement;
    expect(retry).not.toBeNull();

    retry.click();
    await settle();

    // still exactly one effective application; the session advanced
    expect(mock.applied.length).toBe(1);
    expect(mock.labelPosts().length).toBe(2);
    expect(app.display()!.payload.iteration).toBe(1);
    expect(app.dashboard()!.series().sampPct.length).toBe(1);
  });

  it("retries a post that never reached the service", async () => {
    const mock = new MockService(3, 4);
    const { root, app } = buildApp(mock);
    await app.start({ dataset: { synthetic: "n=40,d=4,seed=4" } });

    const ctl = app.display()!;
    for (const sid of ctl.cardIds()) {
      ctl.setChoice(sid, 1);
    }
    mock.dropNextPost = true;
    ctl.submitButton().click();
    await settle();
    expect(mock.applied.length).toBe(0);

    (root.querySelector(".banner .retry") as HTMLButtonElement).click();
    await settle();
    expect(mock.applied.length).toBe(1);
    expect(app.display()!.payload.iteration).toBe(1);
  });

  it("surfaces a field-level 422 by flagging the named card", async () => {
    const mock = new MockService(2, 4);
    const { root, app } = buildApp(mock);
    await app.start({ dataset: { synthetic: "n=40,d=4,seed=5" } });

    const ctl = app.display()!;
    for (const sid of ctl.cardIds()) {
      ctl.setChoice(sid, 1);
    }
    mock.forceNextPostError = {
      status: 422,
      body: {
        code: "unknown-sample",
        message: "sample 's002' is not in the pending display",
        field: "s002",
      },
    };
    ctl.submitButton().click();
    await settle();

    expect(mock.applied.length).toBe(0);
    expect(app.display()!.payload.iteration).toBe(0);
    expect(
      app.bannerTexts().some((t) => t.includes("unknown-sample")),
    ).toBe(true);
    const flagged = root.querySelector(".card.flagged") as HTMLElement;
    expect(flagged.dataset.sampleId).toBe("s002");

    // the next submit goes through untouched
    ctl.submitButton().click();
    await settle();
    expect(mock.applied.length).toBe(1);
    expect(app.display()!.payload.iteration).toBe(1);
  });

  it("shows a banner for an unknown session", async () => {
    const mock = new MockService();
    const { app } = buildApp(mock);
    await app.resume("nosuchsession");
    expect(
      app.bannerTexts().some((t) => t.includes("unknown-session")),
    ).toBe(true);
  });

  it("resumes a finished session straight into the exhausted state", async () => {
    const mock = new MockService(1, 4);
    const first = buildApp(mock);
    await first.app.start({ dataset: { synthetic: "n=40,d=4,seed=6" } });
    const ctl = first.app.display()!;
    for (const sid of ctl.cardIds()) {
      ctl.setChoice(sid, 1);
    }
    ctl.submitButton().click();
    await settle();
    expect(first.app.finished()).toBe(true);

    const second = buildApp(mock);
    await second.app.resume("mock0001");
    await settle();
    expect(second.app.finished()).toBe(true);
    expect(second.app.bannerTexts()).toContain("budget exhausted");
  });
});
