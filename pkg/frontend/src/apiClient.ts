/** Typed client for the documented review endpoints. */

import {
  DecisionAccepted,
  DecisionBody,
  ReviewItemPayload,
  ServiceError,
  StatsPayload,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type NextItemResult =
  | { kind: "item"; item: ReviewItemPayload }
  | { kind: "empty" }
  | { kind: "error"; message: string };

export type DecisionResult =
  | { kind: "accepted"; state: DecisionAccepted["state"]; round: number }
  | { kind: "conflict"; message: string }
  | { kind: "rejected"; field: string; message: string }
  | { kind: "not_found" }
  | { kind: "error"; message: string };

export type StatsResult =
  | { kind: "stats"; payload: StatsPayload }
  | { kind: "error"; message: string };

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async fetchNextItem(reviewer: string): Promise<NextItemResult> {
    let response: Response;
    try {
      response = await this.fetchImpl(
        `${this.baseUrl}/api/queue/next?reviewer=${encodeURIComponent(reviewer)}`,
      );
    } catch (err) {
      return { kind: "error", message: String(err) };
    }
    if (response.status === 204) return { kind: "empty" };
    if (response.status === 200) {
      return { kind: "item", item: (await response.json()) as ReviewItemPayload };
    }
    const body = (await response.json().catch(() => ({}))) as ServiceError;
    return { kind: "error", message: body.error ?? `status ${response.status}` };
  }

  async postDecision(stem: string, body: DecisionBody): Promise<DecisionResult> {
    let response: Response;
    try {
      response = await this.fetchImpl(
        `${this.baseUrl}/api/items/${encodeURIComponent(stem)}/decision`,
        {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(body),
        },
      );
    } catch (err) {
      return { kind: "error", message: String(err) };
    }
    if (response.status === 200) {
      const accepted = (await response.json()) as DecisionAccepted;
      return { kind: "accepted", state: accepted.state, round: accepted.round };
    }
    const payload = (await response.json().catch(() => ({}))) as ServiceError;
    if (response.status === 409) {
      return { kind: "conflict", message: payload.error ?? "already finalized" };
    }
    if (response.status === 422) {
      return {
        kind: "rejected",
        field: payload.field ?? "",
        message: payload.error ?? "validation failed",
      };
    }
    if (response.status === 404) return { kind: "not_found" };
    return { kind: "error", message: payload.error ?? `status ${response.status}` };
  }

  async fetchStats(): Promise<StatsResult> {
    let response: Response;
    try {
      response = await this.fetchImpl(`${this.baseUrl}/api/stats`);
    } catch (err) {
      return { kind: "error", message: String(err) };
    }
    if (response.status !== 200) {
      return { kind: "error", message: `status ${response.status}` };
    }
    return { kind: "stats", payload: (await response.json()) as StatsPayload };
  }

  imageUrl(item: ReviewItemPayload): string {
    return `${this.baseUrl}${item.image_url}`;
  }
}
