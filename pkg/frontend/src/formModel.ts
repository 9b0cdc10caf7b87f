/**
 * Form state for one review item.
 *
 * One Yes/No toggle per presented field; choosing No reveals a mandatory
 * rationale box and an optional corrected-value input. Submission stays
 * blocked until every field has a verdict and every No carries a rationale.
 * The keyboard flow mirrors reviewer throughput needs: y/n answer the
 * focused field and advance, arrows move, Enter submits when ready.
 */

import { validateDecisionBody, ValidationResult } from "./validation.js";
import {
  DecisionBody,
  FieldName,
  ReviewItemPayload,
  VAD_FIELDS,
  VerdictBody,
  VerdictChoice,
} from "./types.js";

export interface FieldState {
  field: FieldName;
  presentedValue: string;
  verdict: VerdictChoice | null;
  rationale: string;
  correctedValue: string;
  showRationale: boolean;
  error: string | null;
}

export class FormModel {
  readonly item: ReviewItemPayload;
  readonly fields: FieldState[];
  focusIndex = 0;

  constructor(item: ReviewItemPayload) {
    this.item = item;
    this.fields = item.presented_fields.map((field) => ({
      field,
      presentedValue: this.presentedValueFor(field),
      verdict: null,
      rationale: "",
      correctedValue: "",
      showRationale: false,
      error: null,
    }));
  }

  private presentedValueFor(field: FieldName): string {
    if (field === "emotion_1") return this.item.emotion_candidates[0] ?? "";
    if (field === "emotion_2") return this.item.emotion_candidates[1] ?? "";
    return String(this.item.vad[field]);
  }

  private state(field: FieldName): FieldState {
    const found = this.fields.find((f) => f.field === field);
    if (!found) throw new Error(`field ${field} not presented`);
    return found;
  }

  setVerdict(field: FieldName, verdict: VerdictChoice): void {
    const s = this.state(field);
    s.verdict = verdict;
    s.showRationale = verdict === "no";
    s.error = null;
    if (verdict === "yes") {
      s.rationale = "";
      s.correctedValue = "";
    }
  }

  setRationale(field: FieldName, text: string): void {
    const s = this.state(field);
    s.rationale = text;
    s.error = null;
  }

  setCorrectedValue(field: FieldName, value: string): void {
    this.state(field).correctedValue = value;
  }

  /** Human-readable reasons the submit button is disabled. */
  blockers(): string[] {
    const out: string[] = [];
    for (const s of this.fields) {
      if (s.verdict === null) out.push(`${s.field}: no verdict yet`);
      else if (s.verdict === "no" && s.rationale.trim() === "")
        out.push(`${s.field}: rejection needs a rationale`);
    }
    return out;
  }

  canSubmit(): boolean {
    if (this.blockers().length > 0) return false;
    return this.validate("reviewer").ok;
  }

  toDecisionBody(reviewer: string): DecisionBody {
    const verdicts: VerdictBody[] = this.fields.map((s) => {
      const v: VerdictBody = { field: s.field, verdict: s.verdict ?? "yes" };
      if (s.verdict === "no") {
        v.rationale = s.rationale;
        const corrected = s.correctedValue.trim();
        if (corrected !== "") {
          // VAD corrections travel as JSON numbers; the server rejects
          // quoted scores.
          v.corrected_value = (VAD_FIELDS as string[]).includes(s.field)
            ? Number(corrected)
            : corrected;
        }
      }
      return v;
    });
    return { reviewer, verdicts };
  }

  validate(reviewer: string): ValidationResult {
    return validateDecisionBody(this.toDecisionBody(reviewer), this.item.presented_fields);
  }

  /** A 422 from the server marks and focuses the named field. */
  applyServerFieldError(field: string, message: string): void {
    const index = this.fields.findIndex((s) => s.field === field);
    if (index >= 0) {
      const entry = this.fields[index]!;
      entry.error = message;
      this.focusIndex = index;
    }
  }

  focusedField(): FieldState {
    return this.fields[this.focusIndex]!;
  }

  /**
   * Keyboard-first flow. Returns "submit" when Enter fires on a submittable
   * form, "handled" when the key changed state, "ignored" otherwise.
   */
  handleKey(key: string): "submit" | "handled" | "ignored" {
    if (key === "Enter") {
      return this.canSubmit() ? "submit" : "ignored";
    }
    if (key === "ArrowDown" || key === "Tab") {
      this.focusIndex = Math.min(this.fields.length - 1, this.focusIndex + 1);
      return "handled";
    }
    if (key === "ArrowUp") {
      this.focusIndex = Math.max(0, this.focusIndex - 1);
      return "handled";
    }
    const lowered = key.toLowerCase();
    if (lowered === "y" || lowered === "n") {
      const s = this.focusedField();
      this.setVerdict(s.field, lowered === "y" ? "yes" : "no");
      if (lowered === "y" && this.focusIndex < this.fields.length - 1) {
        this.focusIndex += 1;
      }
      return "handled";
    }
    return "ignored";
  }
}
