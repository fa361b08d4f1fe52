#!/usr/bin/env node
/** Usage: plot_bias <bias.csv> <fit.json> <out.svg> */

import { writeFileSync } from "fs";
import { biasFigure } from "./bias_figure.js";
import { SchemaError, readBiasCsv, readFitJson } from "./data.js";

function main(argv: string[]): number {
  if (argv.length !== 3) {
    console.error("usage: plot_bias <bias.csv> <fit.json> <out.svg>");
    return 2;
  }
  const [biasPath, fitPath, outPath] = argv;
  try {
    const rows = readBiasCsv(biasPath);
    const fit = readFitJson(fitPath);
    writeFileSync(outPath, biasFigure(rows, fit));
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 1;
    }
    throw err;
  }
  console.log(`wrote ${outPath}`);
  return 0;
}

process.exit(main(process.argv.slice(2)));
