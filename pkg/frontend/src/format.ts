/**
 * Half-up rounding to 2 decimals, matching the service's table rendering.
 * The console never recomputes metrics; this only formats served values.
 */
export function fmt2(value: number): string {
  const scaled = Number((value * 100).toPrecision(12));
  return (Math.round(scaled) / 100).toFixed(2);
}

export function fmtPct(value: number): string {
  return `${Math.round(Number((value * 100).toPrecision(12)))}%`;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
