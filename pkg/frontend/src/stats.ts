/**
 * Aggregations mirrored from the harness so figures can be checked by hand:
 * empirical CDFs with an instantaneous-response fraction, mean/standard
 * error summaries, and per-rank quality mixes.
 */

export const INSTANT_EPSILON_S = 0.01;

export interface CdfPoint {
  latency: number;
  fraction: number;
}

/** Rightmost point per distinct latency, so the curve is right-continuous. */
export function responseCdf(latencies: number[]): CdfPoint[] {
  if (!latencies.length) throw new Error("no latencies to aggregate");
  const sorted = [...latencies].sort((a, b) => a - b);
  const points: CdfPoint[] = [];
  for (let i = 0; i < sorted.length; i++) {
    if (i + 1 < sorted.length && sorted[i + 1] === sorted[i]) continue;
    points.push({ latency: sorted[i], fraction: (i + 1) / sorted.length });
  }
  return points;
}

/** Fraction of responses strictly faster than epsilon. */
export function instantFraction(latencies: number[], epsilon = INSTANT_EPSILON_S): number {
  if (!latencies.length) throw new Error("no latencies to aggregate");
  let n = 0;
  for (const latency of latencies) if (latency < epsilon) n++;
  return n / latencies.length;
}

export interface MeanStderr {
  mean: number;
  stderr: number;
  n: number;
}

export function meanStderr(values: number[]): MeanStderr {
  if (!values.length) throw new Error("no values to aggregate");
  const n = values.length;
  const mean = values.reduce((acc, v) => acc + v, 0) / n;
  if (n === 1) return { mean, stderr: 0, n };
  const variance = values.reduce((acc, v) => acc + (v - mean) ** 2, 0) / (n - 1);
  return { mean, stderr: Math.sqrt(variance / n), n };
}

export interface QualityMix {
  fractions: number[]; // index r-1 holds the fraction of segments at rank r
  meanRank: number;
  segments: number;
}

export function qualityMix(ranks: number[], ladderSize: number): QualityMix {
  if (!ranks.length) throw new Error("no downloaded segments to aggregate");
  const counts = new Array<number>(ladderSize).fill(0);
  for (const rank of ranks) {
    if (!Number.isInteger(rank) || rank < 1 || rank > ladderSize) {
      throw new Error(`rank ${rank} outside ladder 1..${ladderSize}`);
    }
    counts[rank - 1]++;
  }
  const fractions = counts.map((c) => c / ranks.length);
  const meanRank = fractions.reduce((acc, f, i) => acc + (i + 1) * f, 0);
  return { fractions, meanRank, segments: ranks.length };
}
