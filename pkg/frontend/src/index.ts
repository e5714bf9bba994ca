export { SCHEMAS, parseCsv, readCsv } from "./csv.js";
export type { CsvTable, SchemaKey } from "./csv.js";
export { loadRun, loadRuns, requestsOf, segmentsOf, sessionsOf, jobsOf } from "./results.js";
export type { RunDir } from "./results.js";
export {
  INSTANT_EPSILON_S,
  instantFraction,
  meanStderr,
  qualityMix,
  responseCdf,
} from "./stats.js";
export type { CdfPoint, MeanStderr, QualityMix } from "./stats.js";
export { plotCdf, plotStalls, plotQuality } from "./plots.js";
