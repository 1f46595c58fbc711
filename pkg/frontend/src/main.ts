/**
 * Render the report charts from two simulator run directories.
 *
 * Usage: node dist/main.js <sweep-run-dir> <overload-run-dir> <out-dir>
 *   <sweep-run-dir>     holds summary.csv from a UE sweep
 *   <overload-run-dir>  holds plr_timeseries.csv from the overload scenario
 */
import { mkdirSync, readFileSync, writeFileSync } from 'fs';
import { join } from 'path';
import { parseCsv } from './csv.js';
import { plrTimeseriesChart, plrVsUesChart } from './charts.js';
import { sweepSeries, timeseriesCharts } from './series.js';

const SUMMARY_COLUMNS = ['scheduler', 'n_ues', 'seed', 'direction', 'flow', 'plr'];
const TIMESERIES_COLUMNS = ['scheduler', 'n_ues', 'seed', 'bucket_start_ms',
  'direction', 'arrived', 'dropped', 'plr'];

export function generateCharts(
  sweepDir: string, overloadDir: string, outDir: string,
): string[] {
  const written: string[] = [];
  mkdirSync(outDir, { recursive: true });

  const summaryPath = join(sweepDir, 'summary.csv');
  const summary = parseCsv(readFileSync(summaryPath, 'utf8'), summaryPath, SUMMARY_COLUMNS);
  const sweepOut = join(outDir, 'plr_vs_ues.svg');
  writeFileSync(sweepOut, plrVsUesChart(sweepSeries(summary)));
  written.push(sweepOut);

  const seriesPath = join(overloadDir, 'plr_timeseries.csv');
  const series = parseCsv(readFileSync(seriesPath, 'utf8'), seriesPath, TIMESERIES_COLUMNS);
  for (const chart of timeseriesCharts(series)) {
    const out = join(outDir, `plr_timeseries_${chart.scheduler}_seed${chart.seed}.svg`);
    writeFileSync(out, plrTimeseriesChart(chart));
    written.push(out);
  }
  return written;
}

function main(argv: string[]): number {
  if (argv.length !== 3) {
    console.error('usage: node dist/main.js <sweep-run-dir> <overload-run-dir> <out-dir>');
    return 1;
  }
  const [sweepDir, overloadDir, outDir] = argv as [string, string, string];
  try {
    for (const file of generateCharts(sweepDir, overloadDir, outDir)) {
      console.log(`wrote ${file}`);
    }
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith('main.js')) {
  process.exit(main(process.argv.slice(2)));
}
