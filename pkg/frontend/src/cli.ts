#!/usr/bin/env node
/**
 * Command-line front end.
 *
 *   analyze cdf     --in DIR [DIR...] --out FILE.svg
 *   analyze stalls  --in DIR [DIR...] --out FILE.svg
 *   analyze quality --in DIR [DIR...] --out FILE.svg
 *
 * Each DIR is a run directory holding config.json plus the versioned CSVs.
 * Exit codes: 0 wrote the figure, 1 bad input data, 2 bad usage.
 */

import { realpathSync, writeFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import yargs from "yargs";
import { plotCdf, plotQuality, plotStalls } from "./plots.js";
import { loadRuns } from "./results.js";

const PLOTTERS = {
  cdf: plotCdf,
  stalls: plotStalls,
  quality: plotQuality,
} as const;

type FigureKind = keyof typeof PLOTTERS;

export function main(argv: string[]): number {
  let usageError: string | null = null;
  const parser = yargs(argv)
    .scriptName("analyze")
    .usage("$0 <figure> --in DIR [DIR...] --out FILE.svg")
    .command("cdf", "response-time CDF per variant")
    .command("stalls", "mean stalls per session with standard errors")
    .command("quality", "streamed-quality mix per variant")
    .option("in", {
      type: "string",
      array: true,
      demandOption: true,
      describe: "run directories (config.json + CSVs)",
    })
    .option("out", {
      type: "string",
      demandOption: true,
      describe: "output SVG path",
    })
    .demandCommand(1, "pick one of: cdf, stalls, quality")
    .strict()
    .exitProcess(false)
    .fail((msg, err) => {
      usageError = msg ?? (err ? err.message : "bad arguments");
    });

  let parsed;
  try {
    parsed = parser.parseSync();
  } catch (err) {
    usageError = usageError ?? (err instanceof Error ? err.message : String(err));
    parsed = null;
  }
  if (usageError !== null || parsed === null) {
    process.stderr.write(`analyze: ${usageError ?? "bad arguments"}\n`);
    return 2;
  }
  if (parsed.help) return 0;

  const kind = String(parsed._[0]) as FigureKind;
  const plot = PLOTTERS[kind];
  if (!plot) {
    process.stderr.write(`analyze: unknown figure "${kind}"\n`);
    return 2;
  }

  try {
    const runs = loadRuns(parsed.in as string[]);
    const svg = plot(runs);
    writeFileSync(parsed.out as string, svg);
    process.stdout.write(`wrote ${parsed.out}\n`);
    return 0;
  } catch (err) {
    const reason = err instanceof Error ? err.message : String(err);
    process.stderr.write(`analyze ${kind}: ${reason}\n`);
    return 1;
  }
}

function runningAsScript(): boolean {
  try {
    return realpathSync(process.argv[1] ?? "") === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (runningAsScript()) {
  process.exit(main(process.argv.slice(2)));
}
