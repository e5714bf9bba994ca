/**
 * Figure builders. Each takes loaded run directories and returns a complete
 * SVG document string:
 *
 *   plotCdf     response-time CDFs, one panel per (clients, segment duration),
 *               one curve per variant, instantaneous fraction marked on the
 *               left axis
 *   plotStalls  mean stalls per session, one panel per (workers, segment
 *               duration), bars grouped by client count, error bars show the
 *               standard error over sessions
 *   plotQuality streamed-quality mix, one panel per (clients, segment
 *               duration), one stacked bar per variant with a marker line at
 *               the mean rank
 *
 * Runs of the same variant inside a panel (seed repeats) are pooled before
 * aggregating. Exact aggregate values ride along in data-* attributes; the
 * painted geometry is derived from them.
 */

import { RunDir, requestsOf, segmentsOf, sessionsOf } from "./results.js";
import {
  CdfPoint,
  instantFraction,
  meanStderr,
  qualityMix,
  responseCdf,
} from "./stats.js";
import {
  esc,
  niceTicks,
  px,
  rankColor,
  svgDoc,
  tickLabel,
  variantColor,
  variantCompare,
} from "./svg.js";

const PANEL_W = 360;
const PANEL_H = 250;
const TITLE_H = 18;
const PAD = 16;

// curves longer than this are thinned for file size; every emitted point is
// still an exact (latency, fraction) pair of the full CDF
const MAX_CDF_POINTS = 1000;

interface Panel {
  title: string;
  body: string;
}

function assemble(panels: Panel[]): string {
  const cols = panels.length <= 1 ? 1 : panels.length <= 4 ? 2 : 3;
  const rows = Math.ceil(panels.length / cols);
  const width = cols * PANEL_W + (cols + 1) * PAD;
  const height = rows * (PANEL_H + TITLE_H) + (rows + 1) * PAD;
  let body = "";
  panels.forEach((panel, i) => {
    const x = PAD + (i % cols) * (PANEL_W + PAD);
    const y = PAD + Math.floor(i / cols) * (PANEL_H + TITLE_H + PAD);
    body += `<g transform="translate(${x},${y})">\n`;
    body += `<text x="0" y="12" font-size="11" font-weight="600" fill="#222">` +
      `${esc(panel.title)}</text>\n`;
    body += `<g transform="translate(0,${TITLE_H})">\n${panel.body}</g>\n</g>\n`;
  });
  return svgDoc(width, height, body);
}

function panelGroups(
  runs: RunDir[],
  by: (r: RunDir) => [number, number],
): { a: number; b: number; runs: RunDir[] }[] {
  const groups = new Map<string, { a: number; b: number; runs: RunDir[] }>();
  for (const run of runs) {
    const [a, b] = by(run);
    const key = `${a}|${b}`;
    let group = groups.get(key);
    if (!group) {
      group = { a, b, runs: [] };
      groups.set(key, group);
    }
    group.runs.push(run);
  }
  return [...groups.values()].sort((x, y) => x.a - y.a || x.b - y.b);
}

function pooledByVariant(
  runs: RunDir[],
  extract: (r: RunDir) => number[],
): Map<string, number[]> {
  const pooled = new Map<string, number[]>();
  const ordered = [...runs].sort((a, b) => variantCompare(a.variant, b.variant));
  for (const run of ordered) {
    const bucket = pooled.get(run.variant) ?? [];
    bucket.push(...extract(run));
    pooled.set(run.variant, bucket);
  }
  return pooled;
}

function thin<T>(points: T[], cap: number): T[] {
  if (points.length <= cap) return points;
  const out: T[] = [];
  const stride = (points.length - 1) / (cap - 1);
  for (let i = 0; i < cap; i++) out.push(points[Math.round(i * stride)]);
  return out;
}

function vLine(x: number, y1: number, y2: number, stroke: string, extra = ""): string {
  return `<line x1="${px(x)}" y1="${px(y1)}" x2="${px(x)}" y2="${px(y2)}" ` +
    `stroke="${stroke}"${extra}/>\n`;
}

function hLine(x1: number, x2: number, y: number, stroke: string, extra = ""): string {
  return `<line x1="${px(x1)}" y1="${px(y)}" x2="${px(x2)}" y2="${px(y)}" ` +
    `stroke="${stroke}"${extra}/>\n`;
}

function axisText(x: number, y: number, label: string, anchor: string,
                  size = 8, extra = "", fill = "#444"): string {
  return `<text x="${px(x)}" y="${px(y)}" font-size="${size}" fill="${fill}" ` +
    `text-anchor="${anchor}"${extra}>${esc(label)}</text>\n`;
}

// -- response-time CDF --------------------------------------------------------

export function plotCdf(runs: RunDir[]): string {
  const panels = panelGroups(runs, (r) => [r.clients, r.segmentDuration]).map((group) => {
    const curves: { variant: string; points: CdfPoint[]; instant: number }[] = [];
    for (const [variant, latencies] of pooledByVariant(group.runs, (run) =>
      requestsOf(run).rows.map((row) => Number(row.response_s) - Number(row.arrival_s)),
    )) {
      curves.push({
        variant,
        points: responseCdf(latencies),
        instant: instantFraction(latencies),
      });
    }

    const ml = 46, mr = 14, mt = 8, mb = 36;
    const pw = PANEL_W - ml - mr;
    const ph = PANEL_H - mt - mb;
    const xMax = Math.max(0.05, ...curves.map((c) => c.points[c.points.length - 1].latency));
    const xOf = (v: number) => ml + (v / xMax) * pw;
    const yOf = (v: number) => mt + ph - v * ph;

    let body = "";
    for (const f of [0, 0.25, 0.5, 0.75, 1]) {
      body += hLine(ml, ml + pw, yOf(f), "#eee");
      body += axisText(ml - 4, yOf(f) + 2.5, tickLabel(f), "end");
    }
    for (const t of niceTicks(0, xMax, 5)) {
      body += vLine(xOf(t), mt + ph, mt + ph + 3, "#444");
      body += axisText(xOf(t), mt + ph + 12, tickLabel(t), "middle");
    }
    body += vLine(ml, mt, mt + ph, "#444");
    body += hLine(ml, ml + pw, mt + ph, "#444");
    body += axisText(ml + pw / 2, PANEL_H - 6, "response time (s)", "middle", 9);
    body += axisText(0, 0, "fraction of requests", "middle", 9,
      ` transform="translate(10,${px(mt + ph / 2)}) rotate(-90)"`);

    curves.forEach((curve, ci) => {
      const color = variantColor(curve.variant, ci);
      const pts = thin(curve.points, MAX_CDF_POINTS);
      const coords: string[] = [`${px(xOf(0))},${px(yOf(0))}`];
      let prevFraction = 0;
      for (const p of pts) {
        coords.push(`${px(xOf(p.latency))},${px(yOf(prevFraction))}`);
        coords.push(`${px(xOf(p.latency))},${px(yOf(p.fraction))}`);
        prevFraction = p.fraction;
      }
      coords.push(`${px(ml + pw)},${px(yOf(prevFraction))}`);
      const data = pts.map((p) => `${p.latency}:${p.fraction}`).join(";");
      body += `<g class="cdf-curve" data-variant="${esc(curve.variant)}" ` +
        `data-instant="${curve.instant}" data-points="${data}">\n`;
      body += `<polyline fill="none" stroke="${color}" stroke-width="1.3" ` +
        `points="${coords.join(" ")}"/>\n`;
      body += `<circle cx="${px(ml)}" cy="${px(yOf(curve.instant))}" r="2.5" fill="${color}"/>\n`;
      body += axisText(ml + 4, yOf(curve.instant) - 2,
        `${(curve.instant * 100).toFixed(1)}% instant`, "start", 7, "", color);
      body += `</g>\n`;
    });

    curves.forEach((curve, ci) => {
      const y = mt + ph - 8 - (curves.length - 1 - ci) * 11;
      const color = variantColor(curve.variant, ci);
      body += hLine(ml + pw - 58, ml + pw - 44, y - 3, color, ' stroke-width="2"');
      body += axisText(ml + pw - 40, y, curve.variant, "start");
    });

    return {
      title: `${group.a} clients, ${group.b} s segments`,
      body,
    };
  });
  return assemble(panels);
}

// -- stalls per session -------------------------------------------------------

export function plotStalls(runs: RunDir[]): string {
  const panels = panelGroups(runs, (r) => [r.workers, r.segmentDuration]).map((group) => {
    const clientCounts = [...new Set(group.runs.map((r) => r.clients))].sort((a, b) => a - b);
    const variants = [...new Set(group.runs.map((r) => r.variant))].sort(variantCompare);
    const bars: {
      clients: number; variant: string; mean: number; stderr: number; n: number;
    }[] = [];
    for (const clients of clientCounts) {
      const subset = group.runs.filter((r) => r.clients === clients);
      for (const [variant, stalls] of pooledByVariant(subset, (run) =>
        sessionsOf(run).rows.map((row) => Number(row.stalls)),
      )) {
        const agg = meanStderr(stalls);
        bars.push({ clients, variant, mean: agg.mean, stderr: agg.stderr, n: agg.n });
      }
    }

    const ml = 46, mr = 14, mt = 8, mb = 36;
    const pw = PANEL_W - ml - mr;
    const ph = PANEL_H - mt - mb;
    const yMax = Math.max(1e-9, ...bars.map((b) => b.mean + b.stderr)) * 1.15;
    const yOf = (v: number) => mt + ph - (v / yMax) * ph;
    const bandW = pw / clientCounts.length;
    const barW = (bandW * 0.8) / variants.length;

    let body = "";
    for (const t of niceTicks(0, yMax, 5)) {
      body += hLine(ml, ml + pw, yOf(t), "#eee");
      body += axisText(ml - 4, yOf(t) + 2.5, tickLabel(t), "end");
    }
    body += vLine(ml, mt, mt + ph, "#444");
    body += hLine(ml, ml + pw, mt + ph, "#444");
    clientCounts.forEach((clients, gi) => {
      body += axisText(ml + bandW * (gi + 0.5), mt + ph + 12, String(clients), "middle");
    });
    body += axisText(ml + pw / 2, PANEL_H - 6, "clients", "middle", 9);
    body += axisText(0, 0, "stalls / session", "middle", 9,
      ` transform="translate(10,${px(mt + ph / 2)}) rotate(-90)"`);

    for (const bar of bars) {
      const gi = clientCounts.indexOf(bar.clients);
      const vi = variants.indexOf(bar.variant);
      const x = ml + bandW * gi + bandW * 0.1 + barW * vi;
      const y = yOf(bar.mean);
      const color = variantColor(bar.variant, vi);
      body += `<rect class="stall-bar" data-variant="${esc(bar.variant)}" ` +
        `data-clients="${bar.clients}" data-mean="${bar.mean}" ` +
        `data-stderr="${bar.stderr}" data-sessions="${bar.n}" ` +
        `x="${px(x)}" y="${px(y)}" width="${px(barW)}" ` +
        `height="${px(mt + ph - y)}" fill="${color}"/>\n`;
      if (bar.stderr > 0) {
        const cx = x + barW / 2;
        const lo = yOf(Math.max(0, bar.mean - bar.stderr));
        const hi = yOf(bar.mean + bar.stderr);
        body += vLine(cx, hi, lo, "#333");
        body += hLine(cx - 2.5, cx + 2.5, hi, "#333");
        body += hLine(cx - 2.5, cx + 2.5, lo, "#333");
      }
    }

    variants.forEach((variant, vi) => {
      const y = mt + 10 + vi * 11;
      body += `<rect x="${px(ml + pw - 56)}" y="${px(y - 7)}" width="8" height="8" ` +
        `fill="${variantColor(variant, vi)}"/>\n`;
      body += axisText(ml + pw - 44, y, variant, "start");
    });

    return {
      title: `K=${group.a} workers, ${group.b} s segments`,
      body,
    };
  });
  return assemble(panels);
}

// -- streamed quality mix -----------------------------------------------------

export function plotQuality(runs: RunDir[]): string {
  const panels = panelGroups(runs, (r) => [r.clients, r.segmentDuration]).map((group) => {
    const ladderSize = Math.max(...group.runs.map((r) => r.ladderRanks.length));
    const mixes: { variant: string; fractions: number[]; meanRank: number; segments: number }[] = [];
    for (const [variant, ranks] of pooledByVariant(group.runs, (run) =>
      segmentsOf(run).rows.map((row) => Number(row.rep)),
    )) {
      const mix = qualityMix(ranks, ladderSize);
      mixes.push({ variant, ...mix });
    }

    const ml = 46, mr = 36, mt = 8, mb = 36;
    const pw = PANEL_W - ml - mr;
    const ph = PANEL_H - mt - mb;
    const yOf = (fraction: number) => mt + ph - fraction * ph;
    const bandW = pw / mixes.length;
    const barW = bandW * 0.6;

    let body = "";
    for (const f of [0, 0.25, 0.5, 0.75, 1]) {
      body += hLine(ml, ml + pw, yOf(f), "#eee");
      body += axisText(ml - 4, yOf(f) + 2.5, tickLabel(f), "end");
    }
    body += vLine(ml, mt, mt + ph, "#444");
    body += hLine(ml, ml + pw, mt + ph, "#444");
    body += axisText(0, 0, "fraction of segments", "middle", 9,
      ` transform="translate(10,${px(mt + ph / 2)}) rotate(-90)"`);
    for (let rank = 1; rank <= ladderSize; rank++) {
      // the right-hand rank scale: rank r sits at the center of its band
      const y = yOf((rank - 0.5) / ladderSize);
      body += hLine(ml + pw, ml + pw + 3, y, "#444");
      body += axisText(ml + pw + 5, y + 2.5, `R${rank}`, "start",
        8, "", rankColor(rank, ladderSize));
    }

    mixes.forEach((mix, mi) => {
      const x = ml + bandW * mi + (bandW - barW) / 2;
      const fractionsData = mix.fractions.map((f, i) => `${i + 1}:${f}`).join(";");
      body += `<g class="quality-bar" data-variant="${esc(mix.variant)}" ` +
        `data-fractions="${fractionsData}" data-mean-rank="${mix.meanRank}" ` +
        `data-segments="${mix.segments}">\n`;
      let cumulative = 0;
      mix.fractions.forEach((fraction, i) => {
        if (fraction <= 0) {
          cumulative += fraction;
          return;
        }
        const yTop = yOf(cumulative + fraction);
        body += `<rect class="quality-stack" data-rank="${i + 1}" ` +
          `data-fraction="${fraction}" x="${px(x)}" y="${px(yTop)}" ` +
          `width="${px(barW)}" height="${px(yOf(cumulative) - yTop)}" ` +
          `fill="${rankColor(i + 1, ladderSize)}"/>\n`;
        cumulative += fraction;
      });
      const markerY = yOf((mix.meanRank - 0.5) / ladderSize);
      body += `<line class="mean-rank-marker" data-mean-rank="${mix.meanRank}" ` +
        `x1="${px(x - 4)}" y1="${px(markerY)}" x2="${px(x + barW + 4)}" ` +
        `y2="${px(markerY)}" stroke="#c0392b" stroke-width="2"/>\n`;
      body += `</g>\n`;
      body += axisText(x + barW / 2, mt + ph + 12, mix.variant, "middle");
    });

    return {
      title: `${group.a} clients, ${group.b} s segments`,
      body,
    };
  });
  return assemble(panels);
}
