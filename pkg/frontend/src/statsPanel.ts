/**
 * Live agreement summary fed by GET /api/stats.
 *
 * Values mirror the payload verbatim; nulls render as dashes. When a poll
 * fails, the last known values stay up with a staleness badge.
 */

import { StatsPayload } from "./types.js";

export interface StatsRow {
  label: string;
  value: string;
}

function fmt(v: number | null, digits = 4): string {
  return v === null ? "-" : v.toFixed(digits);
}

export class StatsPanelModel {
  payload: StatsPayload | null = null;
  stale = false;
  lastError: string | null = null;

  update(payload: StatsPayload): void {
    this.payload = payload;
    this.stale = false;
    this.lastError = null;
  }

  markStale(error: string): void {
    this.stale = true;
    this.lastError = error;
  }

  rows(): StatsRow[] {
    const p = this.payload;
    if (p === null) {
      return [
        { label: "Finalized", value: "-" },
        { label: "Accuracy", value: "-" },
        { label: "MSE (V/A/D)", value: "- / - / -" },
        { label: "Pearson r (V/A/D)", value: "- / - / -" },
        { label: "Fleiss kappa", value: "-" },
      ];
    }
    return [
      { label: "Finalized", value: String(p.finalized) },
      {
        label: "Accuracy",
        value: p.accuracy_percent === null ? "-" : `${p.accuracy_percent.toFixed(2)}%`,
      },
      {
        label: "MSE (V/A/D)",
        value: `${fmt(p.mse.valence)} / ${fmt(p.mse.arousal)} / ${fmt(p.mse.dominance)}`,
      },
      {
        label: "Pearson r (V/A/D)",
        value: `${fmt(p.pearson.valence)} / ${fmt(p.pearson.arousal)} / ${fmt(p.pearson.dominance)}`,
      },
      { label: "Fleiss kappa", value: fmt(p.fleiss_kappa) },
    ];
  }
}
