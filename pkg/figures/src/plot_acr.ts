import yargs from "yargs";
import type { EChartsOption } from "echarts";
import { loadCsv, numbers, Row } from "./csv";
import { renderSvg, runPlot } from "./render";

export const COLUMNS = ["q0", "a", "c", "T1", "R"];

/**
 * Tokunaga parameters a, c and Horton exponent R of the invariant family as
 * functions of q0, with the q0 = 1/2 endpoints annotated (a = 1, c = 2,
 * R = 4 at the binary point).
 */
export function buildAcrOption(rows: Row[]): EChartsOption {
  const q0 = numbers(rows, "q0");
  const series: { name: string; color: string; values: number[] }[] = [
    { name: "a", color: "#1f6fd0", values: numbers(rows, "a") },
    { name: "c", color: "#d03030", values: numbers(rows, "c") },
    { name: "R", color: "#202020", values: numbers(rows, "R") },
  ];
  return {
    title: { text: "Invariant-family Tokunaga constants and Horton exponent" },
    legend: { top: 28 },
    xAxis: { type: "value", name: "q0", min: q0[0], max: q0[q0.length - 1] },
    yAxis: { type: "value", name: "value" },
    series: series.map((s) => ({
      name: s.name,
      type: "line" as const,
      showSymbol: false,
      lineStyle: { color: s.color },
      itemStyle: { color: s.color },
      data: q0.map((x, i) => [x, s.values[i]]),
      markPoint: {
        symbol: "circle",
        symbolSize: 7,
        label: {
          formatter: `${s.name}(${q0[0]}) = ${s.values[0]}`,
          position: "right",
          color: s.color,
        },
        data: [{ name: `${s.name} endpoint`, coord: [q0[0], s.values[0]] }],
      },
    })),
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
    renderSvg(buildAcrOption(rows), args.out);
    console.log(`wrote ${args.out} (${rows.length} points)`);
  });
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
