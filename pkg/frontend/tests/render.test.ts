import { describe, expect, it } from "vitest";

import { fmt2, fmtPct } from "../src/format.js";
import { renderQueue } from "../src/render.js";
import type { QueueState } from "../src/queue.js";
import type { FlagWire } from "../src/types.js";

function flag(overrides: Partial<FlagWire> = {}): FlagWire {
  return {
    flag_id: "f000001",
    message: {
      id: "m1",
      channel_id: "general",
      author_id: "user7",
      timestamp: "2023-04-02T09:00:01.000Z",
      content: "you are an idiot",
      is_bot: false,
    },
    predicted_label: "toxic",
    scores: { toxic: 0.9, spam: 0.02, not_toxic_not_spam: 0.08 },
    reason: "predicted toxic",
    context: ["hello there"],
    status: "pending",
    created_at: "2023-04-02T09:01:00.000Z",
    verdict: null,
    moderator_id: null,
    resolved_at: null,
    ...overrides,
  };
}

function state(overrides: Partial<QueueState> = {}): QueueState {
  return {
    rows: [{ flag: flag(), pendingVerdict: null, unsent: null }],
    total: 1,
    page: 1,
    pageSize: 50,
    filter: "pending",
    banner: null,
    conflicts: [],
    retrainingCount: 0,
    unsent: [],
    ...overrides,
  };
}

describe("payload -> DOM mapping", () => {
  it("matches the queue snapshot", () => {
    expect(renderQueue(state())).toMatchSnapshot();
  });

  it("escapes message content", () => {
    const hostile = state({
      rows: [
        {
          flag: flag({
            message: { ...flag().message, content: '<script>alert("x")</script>' },
          }),
          pendingVerdict: null,
          unsent: null,
        },
      ],
    });
    const html = renderQueue(hostile);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("half-up formatting matches the service's table rounding", () => {
    expect(fmt2(0.905)).toBe("0.91");
    expect(fmt2(0.9049999)).toBe("0.90");
    expect(fmt2(0.125)).toBe("0.13");
    expect(fmt2(1)).toBe("1.00");
    expect(fmtPct(0.3333333)).toBe("33%");
  });

  it("verdict buttons carry the flag id and label for delegation", () => {
    const html = renderQueue(state());
    expect(html).toContain('data-flag="f000001" data-label="toxic"');
    expect(html).toContain('data-flag="f000001" data-label="not_toxic_not_spam"');
  });
});
