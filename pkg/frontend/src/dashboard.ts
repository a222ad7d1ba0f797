/**
 * Dashboard data: iteration history, the latest per-class table, the
 * grader-agreement gauge, and persona distribution.  Every number comes
 * straight from the service; nothing is recomputed client-side.
 */

import { ApiClient } from "./api.js";
import type { EvalReportWire, PersonaStatsWire, ReportsWire } from "./types.js";

export interface DashboardView {
  /** macro-F1 per iteration, in service order */
  macroF1Series: number[];
  /** the latest evaluation report, if any */
  latest: EvalReportWire | null;
  /** panel agreement (Krippendorff alpha) if the run recorded one */
  alpha: number | null;
  personas: PersonaStatsWire | null;
  /** true when no runs have been served yet */
  placeholder: boolean;
}

function seriesOf(reports: ReportsWire): number[] {
  if (Array.isArray(reports.macro_f1_series)) {
    return reports.macro_f1_series;
  }
  return reports.reports.map((r) => r.macro.f1);
}

function alphaOf(reports: ReportsWire): number | null {
  const fromRecommendation = reports.recommendation?.alpha;
  if (typeof fromRecommendation === "number") return fromRecommendation;
  return typeof reports.alpha === "number" ? reports.alpha : null;
}

export async function loadDashboard(client: ApiClient): Promise<DashboardView> {
  const reports = await client.evalReports();
  const personasPayload = await client.personaStats();
  const personas =
    "available" in personasPayload ? null : (personasPayload as PersonaStatsWire);
  const history = reports.reports ?? [];
  return {
    macroF1Series: seriesOf(reports),
    latest: history.length ? history[history.length - 1]! : null,
    alpha: alphaOf(reports),
    personas,
    placeholder: history.length === 0,
  };
}
