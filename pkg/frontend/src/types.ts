/** Wire types for the review service endpoints. */

export type VerdictChoice = "yes" | "no";

export type FieldName =
  | "emotion_1"
  | "emotion_2"
  | "valence"
  | "arousal"
  | "dominance";

export const VAD_FIELDS: FieldName[] = ["valence", "arousal", "dominance"];

export const EMOTIONS = [
  "amusement",
  "anger",
  "awe",
  "contentment",
  "disgust",
  "excitement",
  "fear",
  "sadness",
  "neutral",
  "unknown",
] as const;

export type EmotionLabel = (typeof EMOTIONS)[number];

export interface ReviewItemPayload {
  stem: string;
  image_url: string;
  emotion_candidates: string[];
  vad: { valence: number; arousal: number; dominance: number };
  presented_fields: FieldName[];
  state: "pending" | "recheck";
  round: number;
}

export interface VerdictBody {
  field: FieldName;
  verdict: VerdictChoice;
  rationale?: string;
  corrected_value?: string | number | null;
}

export interface DecisionBody {
  reviewer: string;
  timestamp?: string;
  verdicts: VerdictBody[];
}

export interface DecisionAccepted {
  state: "finalized" | "recheck";
  round: number;
}

export interface ServiceError {
  error: string;
  field?: string;
  state?: string;
}

export interface StatsPayload {
  finalized: number;
  n_pairs: number;
  accuracy_percent: number | null;
  mse: { valence: number | null; arousal: number | null; dominance: number | null };
  pearson: { valence: number | null; arousal: number | null; dominance: number | null };
  fleiss_kappa: number | null;
  notes: Record<string, string>;
}
