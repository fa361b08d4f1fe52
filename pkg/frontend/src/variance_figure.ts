/**
 * Variance comparison figure: shared-trajectory and split-stream
 * estimator variances against the lag, log-scale y.
 */

import { VarianceRow } from "./data.js";
import { PanelSpec, renderFigure } from "./svg.js";

export function varianceFigure(rows: VarianceRow[]): string {
  const panel: PanelSpec = {
    title: "Variance Comparison",
    xLabel: "lag",
    yLabel: "variance",
    logY: true,
    series: [
      {
        label: "shared trajectory",
        color: "#1f77b4",
        points: rows.map((r) => ({ x: r.lag, y: r.var_joint })),
      },
      {
        label: "independent copies",
        color: "#d62728",
        points: rows.map((r) => ({ x: r.lag, y: r.var_independent })),
      },
    ],
  };
  return renderFigure([panel]);
}
