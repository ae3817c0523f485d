export { parseCsv, column, rawColumn, type Table } from "./csv.js";
export { linearFit, loglogRate, decayEnvelope } from "./fit.js";
export {
  render,
  renderAcoustic,
  renderBranches,
  renderConvergence,
  renderDecay,
  type FigureKind,
} from "./figures.js";
