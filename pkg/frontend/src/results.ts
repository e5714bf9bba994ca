/**
 * Result-directory loader. A directory written by the harness holds
 * config.json (experiment settings plus a fingerprint) next to the versioned
 * CSVs; the fingerprint in each CSV header must match the config's, which
 * catches directories assembled from mixed runs.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { CsvTable, SchemaKey, readCsv } from "./csv.js";

export interface RunDir {
  dir: string;
  fingerprint: string;
  variant: string;
  clients: number;
  workers: number;
  segmentDuration: number;
  ladderRanks: number[];
}

export function loadRun(dir: string): RunDir {
  const path = join(dir, "config.json");
  let doc: any;
  try {
    doc = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`cannot load ${path}: ${(err as Error).message}`);
  }
  const experiment = doc.experiment;
  const catalog = doc.catalog;
  if (!experiment || !catalog || !Array.isArray(catalog.ladder)) {
    throw new Error(`${path}: not an experiment config document`);
  }
  return {
    dir,
    fingerprint: String(doc.fingerprint ?? ""),
    variant: String(experiment.variant),
    clients: Number(experiment.clients),
    workers: Number(experiment.workers),
    segmentDuration: Number(catalog.segment_duration_s),
    ladderRanks: catalog.ladder.map((entry: { rank: number }) => Number(entry.rank)),
  };
}

export function loadRuns(dirs: string[]): RunDir[] {
  if (!dirs.length) throw new Error("no input directories");
  return dirs.map(loadRun);
}

function tableOf(run: RunDir, file: string, schema: SchemaKey): CsvTable {
  const table = readCsv(join(run.dir, file), schema);
  if (run.fingerprint && table.config !== run.fingerprint) {
    throw new Error(`${join(run.dir, file)}: fingerprint ${table.config} does not ` +
      `match config.json (${run.fingerprint})`);
  }
  return table;
}

export function requestsOf(run: RunDir): CsvTable {
  return tableOf(run, "requests.csv", "requests");
}

export function sessionsOf(run: RunDir): CsvTable {
  return tableOf(run, "sessions.csv", "sessions");
}

export function segmentsOf(run: RunDir): CsvTable {
  return tableOf(run, "segments.csv", "segments");
}

export function jobsOf(run: RunDir): CsvTable {
  return tableOf(run, "jobs.csv", "jobs");
}
