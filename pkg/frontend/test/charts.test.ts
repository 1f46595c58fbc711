import { mkdtempSync, readFileSync, writeFileSync, mkdirSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';
import { fileURLToPath } from 'url';
import { describe, expect, it } from 'vitest';
import { parseCsv, CsvTable } from '../src/csv.js';
import { plrTimeseriesChart, plrVsUesChart } from '../src/charts.js';
import { generateCharts } from '../src/main.js';
import { sweepSeries, timeseriesCharts } from '../src/series.js';

const FIXTURES = fileURLToPath(new URL('./fixtures', import.meta.url));

function loadFixture(name: string, required: string[]): CsvTable {
  return parseCsv(readFileSync(join(FIXTURES, name), 'utf8'), name, required);
}

const summary = loadFixture('sweep_summary.csv',
  ['scheduler', 'n_ues', 'seed', 'direction', 'flow', 'plr']);
const timeseries = loadFixture('overload_plr_timeseries.csv',
  ['scheduler', 'n_ues', 'seed', 'bucket_start_ms', 'direction', 'arrived', 'dropped', 'plr']);

/** Deterministic PRNG so the random sample is reproducible. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function sample<T>(items: T[], n: number, rand: () => number): T[] {
  const picked: T[] = [];
  for (let i = 0; i < n; i++) {
    picked.push(items[Math.floor(rand() * items.length)]!);
  }
  return picked;
}

/** All elements of the given class with their attributes, straight off the markup. */
function elements(svg: string, cls: string): Record<string, string>[] {
  const out: Record<string, string>[] = [];
  const elem = new RegExp(`<[a-z]+ [^>]*class="${cls}"[^>]*>`, 'g');
  for (const match of svg.match(elem) ?? []) {
    const attrs: Record<string, string> = {};
    for (const [, k, v] of match.matchAll(/([a-z-]+)="([^"]*)"/g)) {
      attrs[k!] = v!;
    }
    out.push(attrs);
  }
  return out;
}

describe('loss-vs-UEs chart', () => {
  const svg = plrVsUesChart(sweepSeries(summary));

  it('draws one mean line and one seed band per scheduler', () => {
    const schedulers = new Set(summary.rows.map((r) => r['scheduler']));
    const lines = elements(svg, 'mean-line');
    const bands = elements(svg, 'seed-band');
    expect(new Set(lines.map((l) => l['data-scheduler']))).toEqual(schedulers);
    expect(lines).toHaveLength(schedulers.size);
    expect(bands).toHaveLength(schedulers.size);
  });

  it('plots exactly the CSV values (20 random rows)', () => {
    const points = elements(svg, 'mean-point');
    const rand = mulberry32(0xc0ffee);
    for (const row of sample(summary.rows, 20, rand)) {
      const point = points.find((p) =>
        p['data-scheduler'] === row['scheduler'] && p['data-n-ues'] === row['n_ues']);
      expect(point, `point for ${row['scheduler']} n=${row['n_ues']}`).toBeDefined();
      // the exact CSV string of this row's plr must be among the values
      // this point aggregates
      expect(point!['data-values']!.split(';')).toContain(row['plr']);
    }
  });

  it('aggregates seeds into mean and envelope', () => {
    for (const point of elements(svg, 'mean-point')) {
      const values = point['data-values']!.split(';').map(Number);
      const mean = values.reduce((a, b) => a + b, 0) / values.length;
      expect(Number(point['data-mean'])).toBeCloseTo(mean, 12);
    }
  });
});

describe('loss timeseries chart', () => {
  const charts = timeseriesCharts(timeseries);

  it('builds one chart per scheduler in the export', () => {
    expect(charts.map((c) => c.scheduler).sort()).toEqual(['flex', 'qos']);
  });

  it('draws one line per direction and the activation marker', () => {
    for (const chart of charts) {
      const svg = plrTimeseriesChart(chart);
      const lines = elements(svg, 'direction-line');
      expect(new Set(lines.map((l) => l['data-direction']))).toEqual(new Set(['ul', 'dl']));
      const markers = elements(svg, 'activation-marker');
      expect(markers).toHaveLength(1);
      expect(markers[0]!['data-time-ms']).toBe('5000');
    }
  });

  it('plots exactly the CSV values (20 random rows)', () => {
    const byChart = new Map(charts.map((c) => [`${c.scheduler}/${c.seed}`, plrTimeseriesChart(c)]));
    const rand = mulberry32(0xbeef);
    for (const row of sample(timeseries.rows, 20, rand)) {
      const svg = byChart.get(`${row['scheduler']}/${row['seed']}`)!;
      const point = elements(svg, 'bucket-point').find((p) =>
        p['data-direction'] === row['direction']
        && p['data-time-ms'] === row['bucket_start_ms']);
      expect(point, `bucket ${row['bucket_start_ms']} ${row['direction']}`).toBeDefined();
      expect(point!['data-plr']).toBe(row['plr']);
    }
  });
});

describe('end to end', () => {
  it('renders both charts from run directories', () => {
    const base = mkdtempSync(join(tmpdir(), 'tddsim-charts-'));
    const sweepDir = join(base, 'sweep');
    const overloadDir = join(base, 'overload');
    mkdirSync(sweepDir);
    mkdirSync(overloadDir);
    writeFileSync(join(sweepDir, 'summary.csv'),
      readFileSync(join(FIXTURES, 'sweep_summary.csv')));
    writeFileSync(join(overloadDir, 'plr_timeseries.csv'),
      readFileSync(join(FIXTURES, 'overload_plr_timeseries.csv')));

    const written = generateCharts(sweepDir, overloadDir, join(base, 'out'));
    expect(written).toHaveLength(3); // sweep + flex & qos timelines
    for (const file of written) {
      expect(readFileSync(file, 'utf8')).toMatch(/^<svg /);
    }
  });

  it('fails loudly when an export is malformed', () => {
    const base = mkdtempSync(join(tmpdir(), 'tddsim-charts-'));
    const sweepDir = join(base, 'sweep');
    mkdirSync(sweepDir);
    writeFileSync(join(sweepDir, 'summary.csv'), 'scheduler,n_ues\nflex,1\n');
    expect(() => generateCharts(sweepDir, sweepDir, join(base, 'out')))
      .toThrowError(/missing column/);
  });

  it('fails loudly when an export is absent', () => {
    const base = mkdtempSync(join(tmpdir(), 'tddsim-charts-'));
    mkdirSync(join(base, 'sweep'));
    expect(() => generateCharts(join(base, 'sweep'), join(base, 'sweep'), join(base, 'out')))
      .toThrowError(/ENOENT/);
  });
});
