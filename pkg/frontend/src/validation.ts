/**
 * Client-side mirror of the service's decision validation.
 *
 * The server returns 422 when a decision does not cover every presented
 * field exactly once, when a No verdict lacks a rationale, when a corrected
 * value rides on a Yes, or when a corrected value is out of domain. Keeping
 * the same rules here means the form can never construct a structurally
 * rejectable POST body.
 */

import { DecisionBody, FieldName, EMOTIONS, VAD_FIELDS } from "./types.js";

export type ValidationResult = { ok: true } | { ok: false; field: string; error: string };

function invalid(field: string, error: string): ValidationResult {
  return { ok: false, field, error };
}

export function validateDecisionBody(
  body: DecisionBody,
  presentedFields: FieldName[],
): ValidationResult {
  if (!body.reviewer || body.reviewer.trim() === "") {
    return invalid("reviewer", "missing reviewer id");
  }
  const seen = body.verdicts.map((v) => v.field);
  for (const field of seen) {
    if (seen.filter((f) => f === field).length > 1) {
      return invalid(field, `duplicate verdicts for ${field}`);
    }
  }
  for (const field of presentedFields) {
    if (!seen.includes(field)) {
      return invalid(field, `missing verdict for ${field}`);
    }
  }
  for (const field of seen) {
    if (!presentedFields.includes(field)) {
      return invalid(field, `verdict for field not presented: ${field}`);
    }
  }
  for (const v of body.verdicts) {
    if (v.verdict !== "yes" && v.verdict !== "no") {
      return invalid(v.field, "verdict must be yes or no");
    }
    if (v.verdict === "no" && (!v.rationale || v.rationale.trim() === "")) {
      return invalid(v.field, "missing rationale");
    }
    if (v.verdict === "yes" && v.corrected_value != null) {
      return invalid(v.field, "corrected value on a yes verdict");
    }
    if (v.verdict === "no" && v.corrected_value != null) {
      if ((VAD_FIELDS as string[]).includes(v.field)) {
        // The server wants a JSON number; quoted scores are rejected.
        if (
          typeof v.corrected_value !== "number" ||
          !Number.isFinite(v.corrected_value) ||
          v.corrected_value < 1 ||
          v.corrected_value > 9
        ) {
          return invalid(v.field, "corrected score must be a number in 1-9");
        }
      } else {
        const label = String(v.corrected_value).trim().toLowerCase();
        if (!(EMOTIONS as readonly string[]).includes(label)) {
          return invalid(v.field, `unknown emotion label ${String(v.corrected_value)}`);
        }
      }
    }
  }
  return { ok: true };
}
