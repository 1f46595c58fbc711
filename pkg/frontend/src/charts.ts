/**
 * The two report charts.
 *
 * Every plotted point carries its source value in data-* attributes - the
 * sweep points list the exact per-seed plr strings they aggregate, the
 * timeseries points the exact plr string of their bucket - so a rendered
 * chart can always be audited against the CSV it came from.
 */
import { SweepSeries, TimeseriesChartData } from './series.js';
import { Frame, axes, bandPoints, document, polylinePoints, tag, xPix, yPix } from './svg.js';

const PALETTE: Record<string, string> = {
  flex: '#d62728',
  pf: '#1f77b4',
  mr: '#2ca02c',
  qos: '#9467bd',
  ul: '#1f77b4',
  dl: '#d62728',
};

function color(key: string, fallback: string): string {
  return PALETTE[key] ?? fallback;
}

function niceTicks(min: number, max: number, n: number): number[] {
  if (max <= min) return [min];
  const step = (max - min) / n;
  const mag = Math.pow(10, Math.floor(Math.log10(step)));
  const unit = [1, 2, 5, 10].find((u) => u * mag >= step)! * mag;
  const ticks: number[] = [];
  for (let t = Math.ceil(min / unit) * unit; t <= max + unit / 1e6; t += unit) {
    ticks.push(Math.round(t * 1e9) / 1e9);
  }
  return ticks;
}

/** Packet loss against UE count: mean line plus min-max seed band per scheduler. */
export function plrVsUesChart(series: SweepSeries[]): string {
  const allN = series.flatMap((s) => s.points.map((p) => p.nUes));
  const allPlr = series.flatMap((s) => s.points.flatMap((p) => [p.minPlr, p.maxPlr]));
  const f: Frame = {
    width: 640, height: 420, left: 60, right: 20, top: 30, bottom: 46,
    xMin: Math.min(...allN), xMax: Math.max(...allN),
    yMin: 0, yMax: Math.max(0.01, ...allPlr) * 1.05,
  };
  const parts: string[] = [];
  parts.push(axes(
    f, niceTicks(f.xMin, f.xMax, 10), niceTicks(0, f.yMax, 6),
    'UEs', 'packet loss ratio',
    (v) => String(v), (v) => v.toFixed(2),
  ));
  series.forEach((s, i) => {
    const c = color(s.scheduler, `hsl(${(i * 67) % 360} 60% 45%)`);
    const xs = s.points.map((p) => p.nUes);
    parts.push(tag('polygon', {
      class: 'seed-band', 'data-scheduler': s.scheduler,
      points: bandPoints(f, xs, s.points.map((p) => p.maxPlr), s.points.map((p) => p.minPlr)),
      fill: c, 'fill-opacity': 0.15, stroke: 'none',
    }));
    parts.push(tag('polyline', {
      class: 'mean-line', 'data-scheduler': s.scheduler,
      points: polylinePoints(f, xs, s.points.map((p) => p.meanPlr)),
      fill: 'none', stroke: c, 'stroke-width': 1.8,
    }));
    for (const p of s.points) {
      parts.push(tag('circle', {
        class: 'mean-point', 'data-scheduler': s.scheduler,
        'data-n-ues': p.nUes, 'data-mean': p.meanPlr,
        'data-values': p.rawPlrs.join(';'),
        cx: xPix(f, p.nUes), cy: yPix(f, p.meanPlr), r: 2.5, fill: c,
      }));
    }
    parts.push(tag('text', {
      x: f.width - f.right - 6, y: f.top + 14 * (i + 1),
      'text-anchor': 'end', 'font-size': 11, fill: c,
    }, s.scheduler));
  });
  return document(f, parts.join('\n'));
}

/** Per-direction loss timeline for one cell, with the load-change marker. */
export function plrTimeseriesChart(
  chart: TimeseriesChartData, markerMs = 5000,
): string {
  const all = [...chart.directions.values()].flat();
  const f: Frame = {
    width: 640, height: 420, left: 60, right: 20, top: 30, bottom: 46,
    xMin: Math.min(...all.map((p) => p.timeMs)),
    xMax: Math.max(...all.map((p) => p.timeMs)),
    yMin: 0, yMax: Math.max(0.01, ...all.map((p) => p.plr)) * 1.05,
  };
  const parts: string[] = [];
  parts.push(axes(
    f, niceTicks(f.xMin, f.xMax, 10), niceTicks(0, f.yMax, 6),
    'time (ms)', 'packet loss ratio',
    (v) => String(v), (v) => v.toFixed(2),
  ));
  if (f.xMin <= markerMs && markerMs <= f.xMax) {
    const x = xPix(f, markerMs);
    parts.push(tag('line', {
      class: 'activation-marker', 'data-time-ms': markerMs,
      x1: x, y1: yPix(f, f.yMin), x2: x, y2: yPix(f, f.yMax),
      stroke: '#555', 'stroke-dasharray': '5 4',
    }));
    parts.push(tag('text', {
      x: x + 4, y: f.top + 10, 'font-size': 10, fill: '#555',
    }, `t=${markerMs / 1000}s`));
  }
  let i = 0;
  for (const [direction, points] of chart.directions) {
    const c = color(direction, `hsl(${(i * 137) % 360} 60% 45%)`);
    parts.push(tag('polyline', {
      class: 'direction-line', 'data-direction': direction,
      points: polylinePoints(f, points.map((p) => p.timeMs), points.map((p) => p.plr)),
      fill: 'none', stroke: c, 'stroke-width': 1.6,
    }));
    for (const p of points) {
      parts.push(tag('circle', {
        class: 'bucket-point', 'data-direction': direction,
        'data-time-ms': p.timeMs, 'data-plr': p.rawPlr,
        cx: xPix(f, p.timeMs), cy: yPix(f, p.plr), r: 1.6, fill: c,
      }));
    }
    parts.push(tag('text', {
      x: f.width - f.right - 6, y: f.top + 14 * (i + 1),
      'text-anchor': 'end', 'font-size': 11, fill: c,
    }, direction));
    i++;
  }
  parts.push(tag('text', {
    x: f.left, y: 18, 'font-size': 12, fill: '#222',
  }, `${chart.scheduler} seed ${chart.seed}`));
  return document(f, parts.join('\n'));
}
