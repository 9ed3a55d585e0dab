import yargs from "yargs";
import type { EChartsOption } from "echarts";
import { loadCsv, numbers, Row } from "./csv";
import { renderSvg, runPlot } from "./render";

export const COLUMNS = ["m", "q_igw", "q_osc"];

/** Least-squares slope of log q against log m (the power-law exponent). */
export function fitLogLogSlope(m: number[], q: number[]): number {
  const xs = m.map(Math.log);
  const ys = q.map(Math.log);
  const n = xs.length;
  const mx = xs.reduce((s, v) => s + v, 0) / n;
  const my = ys.reduce((s, v) => s + v, 0) / n;
  let sxy = 0;
  let sxx = 0;
  for (let i = 0; i < n; i++) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) ** 2;
  }
  return sxy / sxx;
}

/** Spread of the oscillatory coefficients around the smooth trend, on the
 * log scale; grows with q0. */
export function fluctuationAmplitude(rows: Row[]): number {
  const ref = numbers(rows, "q_igw");
  const osc = numbers(rows, "q_osc");
  const logRatio = ref.map((r, i) => Math.log(osc[i] / r));
  const mean = logRatio.reduce((s, v) => s + v, 0) / logRatio.length;
  const varr =
    logRatio.reduce((s, v) => s + (v - mean) ** 2, 0) / logRatio.length;
  return Math.sqrt(varr);
}

/**
 * Log-log comparison of the invariant-family coefficients (open circles)
 * with the oscillatory invariant law's coefficients (filled circles).
 */
export function buildComparisonOption(rows: Row[]): EChartsOption {
  const m = numbers(rows, "m");
  const igw = numbers(rows, "q_igw");
  const osc = numbers(rows, "q_osc");
  return {
    title: { text: "Offspring coefficients of two prune-invariant laws" },
    legend: { top: 28 },
    xAxis: { type: "log", name: "m" },
    yAxis: { type: "log", name: "q_m" },
    series: [
      {
        name: "invariant family",
        type: "scatter",
        symbol: "emptyCircle",
        symbolSize: 6,
        itemStyle: { color: "#1f6fd0" },
        data: m.map((x, i) => [x, igw[i]]),
      },
      {
        name: "oscillatory invariant",
        type: "scatter",
        symbol: "circle",
        symbolSize: 4,
        itemStyle: { color: "#202020" },
        data: m.map((x, i) => [x, osc[i]]),
      },
    ],
  };
}

export function main(argv: string[]): number {
  const args = yargs(argv)
    .option("in", { type: "string", demandOption: true })
    .option("out", { type: "string", demandOption: true })
    .strict()
    .parseSync();
  return runPlot(() => {
    const rows = loadCsv(args.in, COLUMNS);
    renderSvg(buildComparisonOption(rows), args.out);
    const slope = fitLogLogSlope(numbers(rows, "m"), numbers(rows, "q_igw"));
    console.log(
      `wrote ${args.out} (${rows.length} points, reference slope ${slope.toFixed(3)})`
    );
  });
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
