/**
 * In-memory stand-in for the review service, enforcing the documented
 * contract: 400 without a reviewer id, 204 on an empty queue, 409 for
 * finalized items, 422 naming the offending field, 404 for unknown stems.
 * Decision validation is the same code the client uses, plus the
 * server-only state rules.
 */

import { validateDecisionBody } from "../src/validation.js";
import {
  DecisionBody,
  FieldName,
  ReviewItemPayload,
  StatsPayload,
} from "../src/types.js";
import { FetchLike } from "../src/apiClient.js";

export interface MockItem {
  payload: ReviewItemPayload;
  finalized: boolean;
}

export class MockService {
  items: MockItem[];
  stats: StatsPayload;
  decisionsAccepted: DecisionBody[] = [];
  failNextRequest = false;

  constructor(items: ReviewItemPayload[], stats?: StatsPayload) {
    this.items = items.map((payload) => ({ payload, finalized: false }));
    this.stats = stats ?? emptyStats();
  }

  private respond(status: number, body?: unknown): Response {
    return new Response(body === undefined ? null : JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  handleDecision(stem: string, body: DecisionBody): Response {
    const entry = this.items.find((i) => i.payload.stem === stem);
    if (!entry) return this.respond(404, { error: `unknown stem '${stem}'` });
    if (entry.finalized) {
      return this.respond(409, { error: "item already finalized", state: "finalized" });
    }
    if (!body.reviewer || body.reviewer.trim() === "") {
      return this.respond(422, { error: "missing reviewer id", field: "reviewer" });
    }
    const verdicts = Array.isArray(body.verdicts) ? body.verdicts : [];
    const result = validateDecisionBody(
      { reviewer: body.reviewer, verdicts },
      entry.payload.presented_fields,
    );
    if (!result.ok) {
      return this.respond(422, { error: result.error, field: result.field });
    }
    this.decisionsAccepted.push(body);
    if (verdicts.every((v) => v.verdict === "yes")) {
      entry.finalized = true;
      entry.payload.state = "pending";
      return this.respond(200, { state: "finalized", round: entry.payload.round });
    }
    entry.payload.round += 1;
    entry.payload.state = "recheck";
    return this.respond(200, { state: "recheck", round: entry.payload.round });
  }

  fetch: FetchLike = async (url, init) => {
    if (this.failNextRequest) {
      this.failNextRequest = false;
      throw new Error("network down");
    }
    const parsed = new URL(url, "http://mock");
    const path = parsed.pathname;
    if (path === "/api/queue/next") {
      const reviewer = parsed.searchParams.get("reviewer");
      if (!reviewer) return this.respond(400, { error: "missing reviewer id" });
      const next = this.items.find((i) => !i.finalized);
      if (!next) return this.respond(204);
      return this.respond(200, next.payload);
    }
    if (path === "/api/stats") {
      return this.respond(200, this.stats);
    }
    const decisionMatch = path.match(/^\/api\/items\/([^/]+)\/decision$/);
    if (decisionMatch && init?.method === "POST") {
      const body = JSON.parse(String(init.body)) as DecisionBody;
      return this.handleDecision(decodeURIComponent(decisionMatch[1]!), body);
    }
    return this.respond(404, { error: "unknown endpoint" });
  };
}

export function emptyStats(): StatsPayload {
  return {
    finalized: 0,
    n_pairs: 0,
    accuracy_percent: null,
    mse: { valence: null, arousal: null, dominance: null },
    pearson: { valence: null, arousal: null, dominance: null },
    fleiss_kappa: null,
    notes: { pairs: "degenerate:no pairs" },
  };
}

export function makeItem(
  stem = "img1",
  candidates: string[] = ["awe", "fear"],
): ReviewItemPayload {
  const fields: FieldName[] =
    candidates.length === 2
      ? ["emotion_1", "emotion_2", "valence", "arousal", "dominance"]
      : ["emotion_1", "valence", "arousal", "dominance"];
  return {
    stem,
    image_url: `/api/images/beach/${stem}`,
    emotion_candidates: candidates,
    vad: { valence: 8, arousal: 7, dominance: 7 },
    presented_fields: fields,
    state: "pending",
    round: 1,
  };
}
