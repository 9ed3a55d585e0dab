import { writeFileSync } from "fs";
import * as echarts from "echarts";

/** Render an option to SVG server-side and write it; pure file output. */
export function renderSvg(
  option: echarts.EChartsOption,
  outPath: string,
  width = 900,
  height = 600
): string {
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width,
    height,
  });
  chart.setOption({ animation: false, ...option });
  const svg = chart.renderToSVGString();
  chart.dispose();
  writeFileSync(outPath, svg);
  return svg;
}

/** Shared CLI wrapper: run a file-to-file plot and map errors to exit 1. */
export function runPlot(fn: () => void): number {
  try {
    fn();
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}
