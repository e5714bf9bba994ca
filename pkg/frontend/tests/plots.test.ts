import { rmSync } from "node:fs";
import { afterAll, describe, expect, it } from "vitest";
import { plotCdf, plotQuality, plotStalls } from "../src/plots.js";
import { loadRuns } from "../src/results.js";
import { attrsOf, tmpRoot, writeRun } from "./helpers.js";

const root = tmpRoot();
afterAll(() => rmSync(root, { recursive: true, force: true }));

const REQS: [number, number][] = [[0, 0.005], [0, 0.1], [0, 0.3], [0, 0.3]];

describe("plotCdf", () => {
  it("emits the hand-computed CDF points and instant fraction", () => {
    const dir = writeRun(root, "cdf-exact", {
      variant: "T", clients: 4, requests: REQS, stalls: [0], ranks: [3],
    });
    const svg = plotCdf(loadRuns([dir]));
    const curves = attrsOf(svg, "cdf-curve");
    expect(curves).toHaveLength(1);
    expect(curves[0]["data-variant"]).toBe("T");
    // 1 of 4 responses beat the 10 ms threshold
    expect(curves[0]["data-instant"]).toBe("0.25");
    expect(curves[0]["data-points"]).toBe("0.005:0.25;0.1:0.5;0.3:1");
    expect(svg).toContain("4 clients, 2 s segments");
    expect(svg).toContain("25.0% instant");
  });

  it("pools seed repeats of the same variant into one curve", () => {
    const a = writeRun(root, "cdf-pool-a", {
      variant: "TC", clients: 4, requests: [[0, 0.1]], stalls: [0], ranks: [1],
    });
    const b = writeRun(root, "cdf-pool-b", {
      variant: "TC", clients: 4, requests: [[0, 0.3]], stalls: [0], ranks: [1],
    });
    const curves = attrsOf(plotCdf(loadRuns([a, b])), "cdf-curve");
    expect(curves).toHaveLength(1);
    expect(curves[0]["data-points"]).toBe("0.1:0.5;0.3:1");
  });

  it("lays out one panel per (clients, segment duration), sorted", () => {
    const big = writeRun(root, "cdf-grid-big", {
      variant: "T", clients: 8, requests: REQS, stalls: [0], ranks: [1],
    });
    const small = writeRun(root, "cdf-grid-small", {
      variant: "T", clients: 4, requests: REQS, stalls: [0], ranks: [1],
    });
    const svg = plotCdf(loadRuns([big, small]));
    expect(attrsOf(svg, "cdf-curve")).toHaveLength(2);
    const first = svg.indexOf("4 clients, 2 s segments");
    const second = svg.indexOf("8 clients, 2 s segments");
    expect(first).toBeGreaterThan(-1);
    expect(second).toBeGreaterThan(first);
  });

  it("thins long curves to exact points of the full CDF", () => {
    const n = 2500;
    const reqs: [number, number][] = Array.from({ length: n }, (_, i) =>
      [0, (i + 1) / 1000]);
    const dir = writeRun(root, "cdf-thin", {
      variant: "T", clients: 4, requests: reqs, stalls: [0], ranks: [1],
    });
    const curves = attrsOf(plotCdf(loadRuns([dir])), "cdf-curve");
    const pairs = curves[0]["data-points"].split(";").map((p) => {
      const [lat, frac] = p.split(":");
      return { lat: Number(lat), frac: Number(frac) };
    });
    expect(pairs).toHaveLength(1000);
    expect(pairs[0].lat).toBe(1 / 1000);
    expect(pairs[pairs.length - 1].lat).toBe(n / 1000);
    for (const { lat, frac } of pairs) {
      const idx = Math.round(lat * 1000); // latencies are i/1000 for i=1..n
      expect(frac).toBe(idx / n);
    }
  });

  it("refuses a run with no requests", () => {
    const dir = writeRun(root, "cdf-empty", {
      variant: "T", clients: 4, requests: [], stalls: [0], ranks: [1],
    });
    expect(() => plotCdf(loadRuns([dir]))).toThrow(/no latencies/);
  });

  it("refuses CSVs whose fingerprint differs from config.json", () => {
    const dir = writeRun(root, "cdf-mixed", {
      variant: "T", clients: 4, csvFingerprint: "deadbeef0000",
      requests: REQS, stalls: [0], ranks: [1],
    });
    expect(() => plotCdf(loadRuns([dir]))).toThrow(/fingerprint/);
  });

  it("renders identical bytes for identical inputs", () => {
    const dir = writeRun(root, "cdf-det", {
      variant: "TCPF", clients: 4, requests: REQS, stalls: [0], ranks: [2],
    });
    expect(plotCdf(loadRuns([dir]))).toBe(plotCdf(loadRuns([dir])));
  });
});

describe("plotStalls", () => {
  it("emits hand-computed means and standard errors per bar", () => {
    const four = writeRun(root, "st-four", {
      variant: "T", clients: 4, requests: [[0, 0.1]], stalls: [0, 2], ranks: [1],
    });
    const eight = writeRun(root, "st-eight", {
      variant: "T", clients: 8, requests: [[0, 0.1]], stalls: [2, 2, 2], ranks: [1],
    });
    const svg = plotStalls(loadRuns([four, eight]));
    const bars = attrsOf(svg, "stall-bar");
    expect(bars).toHaveLength(2);
    // [0, 2]: mean 1, sample variance 2, stderr sqrt(2/2) = 1
    expect(bars[0]["data-clients"]).toBe("4");
    expect(bars[0]["data-mean"]).toBe("1");
    expect(bars[0]["data-stderr"]).toBe("1");
    expect(bars[0]["data-sessions"]).toBe("2");
    // [2, 2, 2]: mean 2, stderr 0
    expect(bars[1]["data-clients"]).toBe("8");
    expect(bars[1]["data-mean"]).toBe("2");
    expect(bars[1]["data-stderr"]).toBe("0");
    expect(bars[1]["data-sessions"]).toBe("3");
    // painted heights track the means: the mean-2 bar is twice the mean-1 bar
    const h4 = Number(bars[0].height);
    const h8 = Number(bars[1].height);
    expect(h8 / h4).toBeCloseTo(2, 2);
    expect(svg).toContain("K=4 workers, 2 s segments");
  });

  it("groups panels by (workers, segment duration) and orders variants", () => {
    const runs = loadRuns([
      writeRun(root, "st-tc", {
        variant: "TC", clients: 4, workers: 8,
        requests: [[0, 0.1]], stalls: [1], ranks: [1],
      }),
      writeRun(root, "st-b", {
        variant: "B", clients: 4, workers: 8,
        requests: [[0, 0.1]], stalls: [0], ranks: [1],
      }),
    ]);
    const svg = plotStalls(runs);
    expect(svg).toContain("K=8 workers, 2 s segments");
    const bars = attrsOf(svg, "stall-bar");
    expect(bars.map((b) => b["data-variant"])).toEqual(["B", "TC"]);
  });

  it("pools sessions across seed repeats", () => {
    const a = writeRun(root, "st-pool-a", {
      variant: "TCP", clients: 4, requests: [[0, 0.1]], stalls: [0], ranks: [1],
    });
    const b = writeRun(root, "st-pool-b", {
      variant: "TCP", clients: 4, requests: [[0, 0.1]], stalls: [2], ranks: [1],
    });
    const bars = attrsOf(plotStalls(loadRuns([a, b])), "stall-bar");
    expect(bars).toHaveLength(1);
    expect(bars[0]["data-mean"]).toBe("1");
    expect(bars[0]["data-sessions"]).toBe("2");
  });

  it("refuses a run with no sessions", () => {
    const dir = writeRun(root, "st-empty", {
      variant: "T", clients: 4, requests: [[0, 0.1]], stalls: [], ranks: [1],
    });
    expect(() => plotStalls(loadRuns([dir]))).toThrow(/no values/);
  });
});

describe("plotQuality", () => {
  it("stacks a uniform mix evenly with the marker at mid-bar", () => {
    const dir = writeRun(root, "q-uniform", {
      variant: "T", clients: 4, requests: [[0, 0.1]], stalls: [0],
      ranks: [1, 2, 3, 4, 5],
    });
    const svg = plotQuality(loadRuns([dir]));
    const bars = attrsOf(svg, "quality-bar");
    expect(bars).toHaveLength(1);
    expect(bars[0]["data-fractions"]).toBe("1:0.2;2:0.2;3:0.2;4:0.2;5:0.2");
    expect(bars[0]["data-segments"]).toBe("5");
    expect(Number(bars[0]["data-mean-rank"])).toBeCloseTo(3, 12);

    const stacks = attrsOf(svg, "quality-stack");
    expect(stacks).toHaveLength(5);
    expect(stacks.map((s) => s["data-rank"])).toEqual(["1", "2", "3", "4", "5"]);
    for (const s of stacks) expect(s["data-fraction"]).toBe("0.2");

    // mean rank 3 sits at the center of its band, i.e. mid-bar
    const tops = stacks.map((s) => Number(s.y));
    const bottoms = stacks.map((s) => Number(s.y) + Number(s.height));
    const barTop = Math.min(...tops);
    const barBottom = Math.max(...bottoms);
    const marker = attrsOf(svg, "mean-rank-marker")[0];
    expect(Number(marker.y1)).toBeCloseTo((barTop + barBottom) / 2, 1);
  });

  it("renders an all-top-rank run as one full stack with a high marker", () => {
    const dir = writeRun(root, "q-top", {
      variant: "TCF", clients: 4, requests: [[0, 0.1]], stalls: [0],
      ranks: [5, 5, 5, 5],
    });
    const svg = plotQuality(loadRuns([dir]));
    const bars = attrsOf(svg, "quality-bar");
    expect(bars[0]["data-mean-rank"]).toBe("5");
    expect(bars[0]["data-fractions"]).toBe("1:0;2:0;3:0;4:0;5:1");

    const stacks = attrsOf(svg, "quality-stack");
    expect(stacks).toHaveLength(1); // zero-fraction bands draw nothing
    expect(stacks[0]["data-rank"]).toBe("5");
    expect(stacks[0]["data-fraction"]).toBe("1");

    // marker at (5 - 0.5) / 5 = 90% of the bar, i.e. 10% below the top
    const top = Number(stacks[0].y);
    const height = Number(stacks[0].height);
    const marker = attrsOf(svg, "mean-rank-marker")[0];
    expect(Number(marker.y1)).toBeCloseTo(top + 0.1 * height, 1);
  });

  it("labels the right-hand rank scale", () => {
    const dir = writeRun(root, "q-scale", {
      variant: "T", clients: 4, requests: [[0, 0.1]], stalls: [0], ranks: [2, 2],
    });
    const svg = plotQuality(loadRuns([dir]));
    for (const label of ["R1", "R2", "R3", "R4", "R5"]) {
      expect(svg).toContain(`>${label}</text>`);
    }
  });

  it("refuses a run with no downloaded segments", () => {
    const dir = writeRun(root, "q-empty", {
      variant: "T", clients: 4, requests: [[0, 0.1]], stalls: [0], ranks: [],
    });
    expect(() => plotQuality(loadRuns([dir]))).toThrow(/no downloaded segments/);
  });
});

describe("markup hygiene", () => {
  it("emits balanced tags with no duplicate attributes", () => {
    const dirs = [
      writeRun(root, "mk-a", {
        variant: "T", clients: 4, requests: REQS, stalls: [0, 2],
        ranks: [1, 2, 3, 4, 5],
      }),
      writeRun(root, "mk-b", {
        variant: "TC", clients: 8, workers: 8, requests: REQS, stalls: [1],
        ranks: [5, 5],
      }),
    ];
    const runs = loadRuns(dirs);
    for (const svg of [plotCdf(runs), plotStalls(runs), plotQuality(runs)]) {
      for (const tag of svg.matchAll(/<[a-z]+\s([^>]*?)\/?>/g)) {
        const names = [...tag[1].matchAll(/([a-zA-Z0-9:-]+)="/g)].map((m) => m[1]);
        expect(new Set(names).size, tag[0]).toBe(names.length);
      }
      for (const name of ["svg", "g", "text"]) {
        const open = svg.match(new RegExp(`<${name}[ >]`, "g"))?.length ?? 0;
        const close = svg.match(new RegExp(`</${name}>`, "g"))?.length ?? 0;
        expect(open, name).toBe(close);
      }
    }
  });
});
