/** Wire types mirroring the moderation service's JSON responses. */

export interface MessageWire {
  id: string;
  channel_id: string;
  author_id: string;
  timestamp: string;
  content: string;
  is_bot: boolean;
}

export interface FlagWire {
  flag_id: string;
  message: MessageWire;
  predicted_label: string | null;
  scores: Record<string, number>;
  reason: string;
  context: string[];
  status: "pending" | "resolved";
  created_at: string;
  verdict: string | null;
  moderator_id: string | null;
  resolved_at: string | null;
}

export interface FlagPageWire {
  flags: FlagWire[];
  total: number;
  page: number;
  page_size: number;
}

export interface ClassMetricsWire {
  precision: number;
  recall: number;
  f1: number;
  support: number;
}

export interface AggregateWire {
  precision: number;
  recall: number;
  f1: number;
}

export interface EvalReportWire {
  labels: string[];
  per_class: Record<string, ClassMetricsWire>;
  accuracy: number;
  macro: AggregateWire;
  weighted: AggregateWire;
  total: number;
}

/** The distill run manifest as served by GET /v1/reports/eval. */
export interface ReportsWire {
  reports: EvalReportWire[];
  macro_f1_series?: number[];
  recommendation?: { kind?: string; alpha?: number | null };
  alpha?: number | null;
  [key: string]: unknown;
}

export interface PersonaStatsWire {
  total_messages: number;
  label_shares: Record<string, number>;
  active_users: number;
  persona_counts: Record<string, number>;
  persona_shares: Record<string, number>;
}

export interface ServiceStatsWire {
  pending: number;
  resolved: number;
  retraining_examples: number;
}

export interface ErrorWire {
  code: string;
  message: string;
}

export const MODERATION_LABELS = ["toxic", "spam", "not_toxic_not_spam"] as const;
export type ModerationLabel = (typeof MODERATION_LABELS)[number];
