import { describe, expect, it } from "vitest";
import { parseCsv } from "../src/csv.js";

const GOOD =
  "# schema=requests.v1 config=0123abcd4567\n" +
  "request_id,seq,rep,index,arrival_s,response_s,path,bytes\n" +
  "0,loot,3,0,0,0.005,storage,1000\n" +
  "1,loot,2,1,0,0.1,transcoded,2000\n";

describe("parseCsv", () => {
  it("round-trips a well-formed file", () => {
    const table = parseCsv(GOOD, "requests");
    expect(table.schema).toBe("requests.v1");
    expect(table.config).toBe("0123abcd4567");
    expect(table.rows).toHaveLength(2);
    expect(table.rows[0].response_s).toBe("0.005");
    expect(table.rows[1].path).toBe("transcoded");
  });

  it("accepts a data-free file", () => {
    const table = parseCsv(GOOD.split("\n").slice(0, 2).join("\n") + "\n", "requests");
    expect(table.rows).toHaveLength(0);
  });

  it("refuses an empty file", () => {
    expect(() => parseCsv("", "requests")).toThrow(/empty file/);
  });

  it("refuses a file without the schema header", () => {
    const headerless = GOOD.split("\n").slice(1).join("\n");
    expect(() => parseCsv(headerless, "requests")).toThrow(/header line/);
  });

  it("refuses a schema tag for a different table", () => {
    const jobs =
      "# schema=jobs.v1 config=0123abcd4567\n" +
      "seq,rep,index,origin,enqueued_s,started_s,finished_s,outcome\n";
    expect(() => parseCsv(jobs, "requests"))
      .toThrow(/schema mismatch: file is jobs\.v1/);
  });

  it("refuses renamed columns", () => {
    const renamed = GOOD.replace("arrival_s", "arrived_s");
    expect(() => parseCsv(renamed, "requests")).toThrow(/column mismatch/);
  });

  it("refuses a short row", () => {
    expect(() => parseCsv(GOOD + "2,loot,3\n", "requests"))
      .toThrow(/row 5: 3 fields, expected 8/);
  });
});
