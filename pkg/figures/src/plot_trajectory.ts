import yargs from "yargs";
import type { EChartsOption } from "echarts";
import { loadCsv, numbers, Row } from "./csv";
import { renderSvg, runPlot } from "./render";

export const COLUMNS = ["step", "q0", "mean", "sup_distance", "status"];

/**
 * Two panels over pruning steps: the extinction probability path on top and
 * the grid distance to the matching invariant law below (log scale; zero
 * distances, e.g. an exactly invariant input, are dropped from the log
 * panel).
 */
export function buildTrajectoryOption(rows: Row[]): EChartsOption {
  const step = numbers(rows, "step");
  const q0 = numbers(rows, "q0");
  const dist = numbers(rows, "sup_distance");
  const distPts = step
    .map((s, i) => [s, dist[i]] as [number, number])
    .filter(([, d]) => d > 0);
  return {
    title: { text: "Iterated pruning trajectory" },
    grid: [
      { top: 50, height: "32%" },
      { top: "58%", height: "30%" },
    ],
    xAxis: [
      { type: "value", gridIndex: 0, name: "step" },
      { type: "value", gridIndex: 1, name: "step" },
    ],
    yAxis: [
      { type: "value", gridIndex: 0, name: "q0", scale: true },
      { type: "log", gridIndex: 1, name: "sup distance" },
    ],
    series: [
      {
        name: "q0",
        type: "line",
        xAxisIndex: 0,
        yAxisIndex: 0,
        showSymbol: false,
        data: step.map((s, i) => [s, q0[i]]),
      },
      {
        name: "distance to invariant law",
        type: "line",
        xAxisIndex: 1,
        yAxisIndex: 1,
        showSymbol: false,
        data: distPts,
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
    renderSvg(buildTrajectoryOption(rows), args.out);
    console.log(`wrote ${args.out} (${rows.length} steps)`);
  });
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
