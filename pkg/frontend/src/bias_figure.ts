/**
 * Two-panel bias figure: absolute bias vs lag, and log absolute bias vs
 * lag with the fitted decay line overlaid (when fit.json carries one).
 */

import { BiasRow, Fit } from "./data.js";
import { PanelSpec, Series, renderFigure } from "./svg.js";

export function biasFigure(rows: BiasRow[], fit: Fit | null): string {
  const absPanel: PanelSpec = {
    title: "Absolute Bias vs Lag",
    xLabel: "lag",
    yLabel: "|bias|",
    series: [
      {
        label: "",
        color: "#1f77b4",
        points: rows.map((r) => ({ x: r.lag, y: r.abs_bias })),
        errorBars: rows.map((r) => 3 * r.se_mean),
      },
    ],
  };

  const logSeries: Series[] = [
    {
      label: "log |bias|",
      color: "#1f77b4",
      points: rows.map((r) => ({ x: r.lag, y: r.log_abs_bias })),
    },
  ];
  const annotations: string[] = [];
  // the overlay only makes sense with at least two points under it
  if (fit && rows.length > 1) {
    const lags = fit.fit_lags.length > 1 ? fit.fit_lags : rows.map((r) => r.lag);
    const lo = Math.min(...lags);
    const hi = Math.max(...lags);
    logSeries.push({
      label: "fit",
      color: "#d62728",
      dashed: true,
      points: [
        { x: lo, y: fit.intercept + fit.slope * lo },
        { x: hi, y: fit.intercept + fit.slope * hi },
      ],
    });
    annotations.push(`slope = ${fit.slope.toFixed(4)}`);
    if (typeof fit.r2 === "number") annotations.push(`r2 = ${fit.r2.toFixed(4)}`);
  }
  const logPanel: PanelSpec = {
    title: "Log Absolute Bias vs Lag",
    xLabel: "lag",
    yLabel: "log |bias|",
    series: logSeries,
    annotations,
  };

  return renderFigure([absPanel, logPanel]);
}
