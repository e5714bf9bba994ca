/**
 * Versioned CSV contract shared with the experiment harness.
 *
 * Every file starts with `# schema=<name>.v1 config=<fingerprint>` followed
 * by a column header row. Readers refuse files whose schema tag or column
 * set does not match the tables below, so a figure can never be built from
 * the wrong kind of input.
 */

import { readFileSync } from "node:fs";

export const SCHEMAS = {
  requests: {
    version: "requests.v1",
    columns: ["request_id", "seq", "rep", "index", "arrival_s", "response_s", "path", "bytes"],
  },
  sessions: {
    version: "sessions.v1",
    columns: ["client_id", "seq", "variant", "stalls", "stall_time_s", "startup_delay_s"],
  },
  segments: {
    version: "segments.v1",
    columns: ["client_id", "seq", "index", "rep", "dl_start_s", "dl_end_s"],
  },
  jobs: {
    version: "jobs.v1",
    columns: ["seq", "rep", "index", "origin", "enqueued_s", "started_s", "finished_s", "outcome"],
  },
} as const;

export type SchemaKey = keyof typeof SCHEMAS;

export interface CsvTable {
  schema: string;
  config: string;
  columns: string[];
  rows: Record<string, string>[];
}

const HEADER_RE = /^# schema=(\S+) config=(\S+)\s*$/;

export function parseCsv(text: string, schema: SchemaKey): CsvTable {
  const want = SCHEMAS[schema];
  const lines = text.split(/\r?\n/);
  while (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (!lines.length) {
    throw new Error(`empty file; expected a "# schema=${want.version}" header`);
  }
  const header = HEADER_RE.exec(lines[0]);
  if (!header) {
    throw new Error('missing "# schema=... config=..." header line');
  }
  const [, version, config] = header;
  if (version !== want.version) {
    throw new Error(`schema mismatch: file is ${version}, reader expects ${want.version}`);
  }
  if (lines.length < 2) {
    throw new Error(`missing column header row for ${version}`);
  }
  const columns = lines[1].split(",");
  if (columns.join(",") !== want.columns.join(",")) {
    throw new Error(`column mismatch for ${version}: got [${columns.join(", ")}], ` +
      `expected [${want.columns.join(", ")}]`);
  }
  const rows: Record<string, string>[] = [];
  for (let i = 2; i < lines.length; i++) {
    const parts = lines[i].split(",");
    if (parts.length !== columns.length) {
      throw new Error(`row ${i + 1}: ${parts.length} fields, expected ${columns.length}`);
    }
    const row: Record<string, string> = {};
    for (let j = 0; j < columns.length; j++) row[columns[j]] = parts[j];
    rows.push(row);
  }
  return { schema: version, config, columns, rows };
}

export function readCsv(path: string, schema: SchemaKey): CsvTable {
  let text: string;
  try {
    text = readFileSync(path, "utf-8");
  } catch (err) {
    throw new Error(`cannot read ${path}: ${(err as Error).message}`);
  }
  try {
    return parseCsv(text, schema);
  } catch (err) {
    throw new Error(`${path}: ${(err as Error).message}`);
  }
}
