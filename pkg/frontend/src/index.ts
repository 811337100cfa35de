export { readCsv, requireColumns, numericColumn, stringColumn, SchemaError } from "./csv.js";
export { linearScale, logScale, SvgBuilder, fmt, tickLabel } from "./svg.js";
export {
  densityOverlay,
  memoryLossFigure,
  sigmaCurveFigure,
  qqFigure,
  pathFanFigure,
  laddersFigure,
  renderAll,
  STANDARD_SET,
} from "./figures.js";
export type { Figure, FigureModel, Series } from "./figures.js";
export { main } from "./cli.js";
