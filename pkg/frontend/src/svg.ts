/**
 * Hand-rolled SVG output. Fixed layout constants, no timestamps or random
 * ids, so rendering the same inputs twice yields byte-identical files.
 * Elements that carry data also carry exact values in data-* attributes
 * (String(number), full round-trip precision); geometry is rounded for size.
 */

export function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Geometry coordinate: rounded, fixed width. */
export function px(v: number): string {
  return v.toFixed(2);
}

export function svgDoc(width: number, height: number, body: string): string {
  return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `font-family="Helvetica, Arial, sans-serif">\n` +
    `<rect width="${width}" height="${height}" fill="#fff"/>\n` +
    body +
    `</svg>\n`;
}

export function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || 1;
  const rough = range / count;
  const magnitude = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * magnitude).find((s) => s >= rough) ?? rough;
  const start = Math.ceil(min / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= max + step * 0.01; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function tickLabel(v: number): string {
  if (v === 0) return "0";
  if (Number.isInteger(v)) return String(v);
  return String(Number(v.toFixed(6)));
}

const VARIANT_COLORS: Record<string, string> = {
  B: "#7f7f7f",
  T: "#1f77b4",
  TC: "#ff7f0e",
  TCP: "#2ca02c",
  TCF: "#d62728",
  TCPF: "#9467bd",
};
const EXTRA_COLORS = ["#8c564b", "#e377c2", "#17becf", "#bcbd22"];

export function variantColor(variant: string, fallbackIndex = 0): string {
  return VARIANT_COLORS[variant] ?? EXTRA_COLORS[fallbackIndex % EXTRA_COLORS.length];
}

const VARIANT_ORDER = ["B", "T", "TC", "TCP", "TCF", "TCPF"];

export function variantCompare(a: string, b: string): number {
  const ia = VARIANT_ORDER.indexOf(a);
  const ib = VARIANT_ORDER.indexOf(b);
  if (ia !== -1 && ib !== -1) return ia - ib;
  if (ia !== -1) return -1;
  if (ib !== -1) return 1;
  return a < b ? -1 : a > b ? 1 : 0;
}

const RANK_PALETTE = ["#c6dbef", "#9ecae1", "#6baed6", "#3182bd", "#08519c"];

export function rankColor(rank: number, ladderSize: number): string {
  if (ladderSize <= RANK_PALETTE.length) return RANK_PALETTE[rank - 1];
  const i = Math.min(RANK_PALETTE.length - 1,
    Math.floor(((rank - 1) * RANK_PALETTE.length) / ladderSize));
  return RANK_PALETTE[i];
}
