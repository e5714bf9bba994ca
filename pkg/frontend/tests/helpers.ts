import { mkdtempSync, mkdirSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const FP = "0123abcd4567";

export interface RunFixture {
  variant: string;
  clients: number;
  workers?: number;
  segdur?: number;
  ladderSize?: number;
  fingerprint?: string;
  csvFingerprint?: string; // header value, when it should differ from config.json
  requests?: [number, number][]; // [arrival_s, response_s]
  stalls?: number[];
  ranks?: number[];
}

export function tmpRoot(): string {
  return mkdtempSync(join(tmpdir(), "analyze-test-"));
}

/** Writes config.json plus the three CSVs the figures read; returns the dir. */
export function writeRun(root: string, name: string, fx: RunFixture): string {
  const dir = join(root, name);
  mkdirSync(dir, { recursive: true });
  const fp = fx.fingerprint ?? FP;
  const csvFp = fx.csvFingerprint ?? fp;
  const ladderSize = fx.ladderSize ?? 5;
  const ladder = Array.from({ length: ladderSize }, (_, i) => ({
    rank: i + 1,
    bitrate_bps: 2e6 * (i + 1),
  }));
  writeFileSync(join(dir, "config.json"), JSON.stringify({
    fingerprint: fp,
    experiment: {
      variant: fx.variant,
      clients: fx.clients,
      workers: fx.workers ?? 4,
      horizon_s: 600,
      arrival_rate_per_s: 0.1,
      seed: 1,
      clock: "virtual",
    },
    catalog: {
      segment_duration_s: fx.segdur ?? 2,
      duration_s: 80,
      size_jitter: 0.1,
      ladder,
    },
  }, null, 2));

  const requests = fx.requests ?? [];
  writeFileSync(join(dir, "requests.csv"),
    `# schema=requests.v1 config=${csvFp}\n` +
    "request_id,seq,rep,index,arrival_s,response_s,path,bytes\n" +
    requests.map(([a, r], i) =>
      `${i},loot,3,${i},${a},${r},storage,1000`).join("\n") +
    (requests.length ? "\n" : ""));

  const stalls = fx.stalls ?? [];
  writeFileSync(join(dir, "sessions.csv"),
    `# schema=sessions.v1 config=${csvFp}\n` +
    "client_id,seq,variant,stalls,stall_time_s,startup_delay_s\n" +
    stalls.map((s, i) =>
      `${i},loot,${fx.variant},${s},0.0,0.5`).join("\n") +
    (stalls.length ? "\n" : ""));

  const ranks = fx.ranks ?? [];
  writeFileSync(join(dir, "segments.csv"),
    `# schema=segments.v1 config=${csvFp}\n` +
    "client_id,seq,index,rep,dl_start_s,dl_end_s\n" +
    ranks.map((r, i) =>
      `0,loot,${i},${r},${i},${i + 1}`).join("\n") +
    (ranks.length ? "\n" : ""));
  return dir;
}

/** Pulls the attributes of every element with the given class. */
export function attrsOf(svg: string, cls: string): Record<string, string>[] {
  const out: Record<string, string>[] = [];
  const tag = new RegExp(`<[a-z]+ class="${cls}"([^>]*)>`, "g");
  for (const m of svg.matchAll(tag)) {
    const attrs: Record<string, string> = {};
    for (const am of m[1].matchAll(/([a-zA-Z0-9-]+)="([^"]*)"/g)) {
      attrs[am[1]] = am[2];
    }
    out.push(attrs);
  }
  return out;
}
