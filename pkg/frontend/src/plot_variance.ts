#!/usr/bin/env node
/** Usage: plot_variance <variance.csv> <out.svg> */

import { writeFileSync } from "fs";
import { SchemaError, readVarianceCsv } from "./data.js";
import { varianceFigure } from "./variance_figure.js";

function main(argv: string[]): number {
  if (argv.length !== 2) {
    console.error("usage: plot_variance <variance.csv> <out.svg>");
    return 2;
  }
  const [variancePath, outPath] = argv;
  try {
    const rows = readVarianceCsv(variancePath);
    writeFileSync(outPath, varianceFigure(rows));
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
