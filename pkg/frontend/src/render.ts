/**
 * Pure payload -> HTML mapping.  Keeping renderers as string functions makes
 * the snapshot tests trivial and the markup auditable: every number in the
 * output is a formatted service value.
 */

import { escapeHtml, fmt2, fmtPct } from "./format.js";
import type { DashboardView } from "./dashboard.js";
import type { QueueRow, QueueState } from "./queue.js";
import { MODERATION_LABELS } from "./types.js";

function verdictButtons(flagId: string): string {
  return MODERATION_LABELS.map(
    (label) =>
      `<button class="verdict" data-flag="${escapeHtml(flagId)}" data-label="${label}">${label}</button>`,
  ).join("");
}

function rowBadges(row: QueueRow): string {
  const badges: string[] = [];
  if (row.pendingVerdict) {
    badges.push(`<span class="badge pending-verdict">submitting ${escapeHtml(row.pendingVerdict)}…</span>`);
  }
  if (row.unsent) {
    badges.push(`<span class="badge unsent">unsent: ${escapeHtml(row.unsent)}</span>`);
  }
  return badges.join("");
}

function scoreCells(scores: Record<string, number>): string {
  return Object.entries(scores)
    .map(([label, value]) => `${escapeHtml(label)} ${fmt2(value)}`)
    .join(" · ");
}

export function renderQueue(state: QueueState): string {
  const banner = state.banner
    ? `<div class="banner error">${escapeHtml(state.banner)}</div>`
    : "";
  const conflicts = state.conflicts
    .map((c) => `<div class="banner conflict">${escapeHtml(c)}</div>`)
    .join("");
  const counter = `<div class="retraining-counter">retraining examples: <b>${state.retrainingCount}</b></div>`;
  if (state.rows.length === 0) {
    return `${banner}${conflicts}${counter}<div class="empty-state">no ${escapeHtml(state.filter)} flags — queue is clear</div>`;
  }
  const rows = state.rows
    .map((row) => {
      const flag = row.flag;
      const context = flag.context
        .map((line) => `<div class="context-line">${escapeHtml(line)}</div>`)
        .join("");
      return `<tr class="flag-row" data-flag="${escapeHtml(flag.flag_id)}">
  <td class="flag-id">${escapeHtml(flag.flag_id)}</td>
  <td class="message">
    ${context}
    <div class="focus-text">${escapeHtml(flag.message.content)}</div>
  </td>
  <td class="predicted">${escapeHtml(flag.predicted_label ?? "—")}<div class="scores">${scoreCells(flag.scores)}</div></td>
  <td class="reason">${escapeHtml(flag.reason)}</td>
  <td class="actions">${verdictButtons(flag.flag_id)}${rowBadges(row)}</td>
</tr>`;
    })
    .join("\n");
  return `${banner}${conflicts}${counter}
<table class="queue">
<thead><tr><th>flag</th><th>message</th><th>predicted</th><th>reason</th><th>verdict</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>
<div class="pager">page ${state.page} · ${state.total} ${escapeHtml(state.filter)} flag(s)</div>`;
}

export function renderDashboard(view: DashboardView): string {
  if (view.placeholder) {
    return `<div class="placeholder">no evaluation runs yet — start a distillation loop to see results here</div>`;
  }
  const series = view.macroF1Series
    .map(
      (value, i) =>
        `<span class="series-point" data-iteration="${i + 1}">${fmt2(value)}</span>`,
    )
    .join(" ");
  let table = "";
  if (view.latest) {
    const body = view.latest.labels
      .map((label) => {
        const m = view.latest!.per_class[label]!;
        return `<tr><td>${escapeHtml(label)}</td><td>${fmt2(m.precision)}</td><td>${fmt2(m.recall)}</td><td>${fmt2(m.f1)}</td><td>${m.support}</td></tr>`;
      })
      .join("\n");
    table = `<table class="metrics">
<thead><tr><th>class</th><th>precision</th><th>recall</th><th>f1</th><th>n</th></tr></thead>
<tbody>
${body}
<tr class="accuracy"><td>accuracy</td><td></td><td></td><td>${fmt2(view.latest.accuracy)}</td><td>${view.latest.total}</td></tr>
<tr class="macro"><td>macro avg</td><td>${fmt2(view.latest.macro.precision)}</td><td>${fmt2(view.latest.macro.recall)}</td><td>${fmt2(view.latest.macro.f1)}</td><td>${view.latest.total}</td></tr>
<tr class="weighted"><td>weighted avg</td><td>${fmt2(view.latest.weighted.precision)}</td><td>${fmt2(view.latest.weighted.recall)}</td><td>${fmt2(view.latest.weighted.f1)}</td><td>${view.latest.total}</td></tr>
</tbody>
</table>`;
  }
  const alpha =
    view.alpha === null
      ? ""
      : `<div class="alpha-gauge" data-reliable="${view.alpha >= 0.667}">grader agreement α = ${fmt2(view.alpha)}${view.alpha < 0.667 ? " (below the 0.667 reliability floor)" : ""}</div>`;
  let personas = "";
  if (view.personas) {
    const counts = view.personas.persona_counts;
    const shares = view.personas.persona_shares;
    personas = `<div class="personas">${Object.keys(counts)
      .sort()
      .map(
        (p) =>
          `<span class="persona" data-persona="${escapeHtml(p)}">${escapeHtml(p)}: ${counts[p]} (${fmtPct(shares[p] ?? 0)})</span>`,
      )
      .join(" ")}</div>`;
  }
  return `<div class="series">macro-F1 by iteration: ${series}</div>
${table}
${alpha}
${personas}`;
}
