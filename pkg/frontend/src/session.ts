/**
 * One reviewer's session: a single active item, submit, then an optimistic
 * fetch of the next item. Network failures surface as retriable banners.
 */

import { ApiClient } from "./apiClient.js";
import { FormModel } from "./formModel.js";

export type SessionState =
  | { kind: "idle" }
  | { kind: "reviewing"; form: FormModel }
  | { kind: "drained" }
  | { kind: "error"; message: string; retriable: true };

export class ReviewSession {
  state: SessionState = { kind: "idle" };
  banner: string | null = null;

  constructor(
    private readonly api: ApiClient,
    readonly reviewer: string,
  ) {}

  async loadNext(): Promise<SessionState> {
    const result = await this.api.fetchNextItem(this.reviewer);
    if (result.kind === "item") {
      this.state = { kind: "reviewing", form: new FormModel(result.item) };
      this.banner = null;
    } else if (result.kind === "empty") {
      this.state = { kind: "drained" };
      this.banner = null;
    } else {
      this.state = { kind: "error", message: result.message, retriable: true };
      this.banner = `queue fetch failed: ${result.message}`;
    }
    return this.state;
  }

  /** Returns true when the decision was accepted and the next item loads. */
  async submit(): Promise<boolean> {
    if (this.state.kind !== "reviewing") return false;
    const form = this.state.form;
    if (!form.canSubmit()) {
      this.banner = form.blockers().join("; ");
      return false;
    }
    const result = await this.api.postDecision(
      form.item.stem,
      form.toDecisionBody(this.reviewer),
    );
    switch (result.kind) {
      case "accepted":
        await this.loadNext();
        return true;
      case "rejected":
        form.applyServerFieldError(result.field, result.message);
        this.banner = `server rejected ${result.field}: ${result.message}`;
        return false;
      case "conflict":
        // Someone else finalized it; move on.
        this.banner = "item was already finalized elsewhere";
        await this.loadNext();
        return false;
      case "not_found":
        this.banner = "item vanished from the queue";
        await this.loadNext();
        return false;
      default:
        this.banner = `submit failed: ${result.message}`;
        return false;
    }
  }
}
