/** Just enough SVG: a linear frame, a few element builders, no dependencies. */

export interface Frame {
  width: number;
  height: number;
  left: number;
  right: number;
  top: number;
  bottom: number;
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

export function xPix(f: Frame, x: number): number {
  const span = f.xMax - f.xMin || 1;
  return round2(f.left + ((x - f.xMin) / span) * (f.width - f.left - f.right));
}

export function yPix(f: Frame, y: number): number {
  const span = f.yMax - f.yMin || 1;
  return round2(f.height - f.bottom - ((y - f.yMin) / span) * (f.height - f.top - f.bottom));
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}

export function escapeXml(s: string): string {
  return s.replace(/&/g, '&amp;').replace(/</g, '&lt;')
    .replace(/>/g, '&gt;').replace(/"/g, '&quot;');
}

export function tag(
  name: string, attrs: Record<string, string | number>, body = '',
): string {
  const parts = Object.entries(attrs)
    .map(([k, v]) => `${k}="${escapeXml(String(v))}"`)
    .join(' ');
  return body === '' && name !== 'text'
    ? `<${name} ${parts}/>`
    : `<${name} ${parts}>${body}</${name}>`;
}

export function polylinePoints(f: Frame, xs: number[], ys: number[]): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    pts.push(`${xPix(f, xs[i] as number)},${yPix(f, ys[i] as number)}`);
  }
  return pts.join(' ');
}

/** Closed band: upper edge left-to-right, then lower edge back. */
export function bandPoints(
  f: Frame, xs: number[], upper: number[], lower: number[],
): string {
  const fwd: string[] = [];
  const back: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    fwd.push(`${xPix(f, xs[i] as number)},${yPix(f, upper[i] as number)}`);
    back.unshift(`${xPix(f, xs[i] as number)},${yPix(f, lower[i] as number)}`);
  }
  return fwd.concat(back).join(' ');
}

export function axes(
  f: Frame, xTicks: number[], yTicks: number[],
  xLabel: string, yLabel: string,
  fmtX: (v: number) => string = String, fmtY: (v: number) => string = String,
): string {
  const parts: string[] = [];
  const x0 = xPix(f, f.xMin);
  const x1 = xPix(f, f.xMax);
  const y0 = yPix(f, f.yMin);
  const y1 = yPix(f, f.yMax);
  parts.push(tag('line', { x1: x0, y1: y0, x2: x1, y2: y0, stroke: '#333' }));
  parts.push(tag('line', { x1: x0, y1: y0, x2: x0, y2: y1, stroke: '#333' }));
  for (const t of xTicks) {
    const x = xPix(f, t);
    parts.push(tag('line', { x1: x, y1: y0, x2: x, y2: y0 + 4, stroke: '#333' }));
    parts.push(tag('text', {
      x, y: y0 + 16, 'text-anchor': 'middle', 'font-size': 10,
    }, escapeXml(fmtX(t))));
  }
  for (const t of yTicks) {
    const y = yPix(f, t);
    parts.push(tag('line', { x1: x0 - 4, y1: y, x2: x0, y2: y, stroke: '#333' }));
    parts.push(tag('text', {
      x: x0 - 7, y: y + 3, 'text-anchor': 'end', 'font-size': 10,
    }, escapeXml(fmtY(t))));
  }
  parts.push(tag('text', {
    x: (x0 + x1) / 2, y: f.height - 4, 'text-anchor': 'middle', 'font-size': 11,
  }, escapeXml(xLabel)));
  parts.push(tag('text', {
    x: 12, y: (y0 + y1) / 2, 'text-anchor': 'middle', 'font-size': 11,
    transform: `rotate(-90 12 ${(y0 + y1) / 2})`,
  }, escapeXml(yLabel)));
  return parts.join('\n');
}

export function document(f: Frame, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${f.width}" height="${f.height}" viewBox="0 0 ${f.width} ${f.height}">`,
    tag('rect', { x: 0, y: 0, width: f.width, height: f.height, fill: 'white' }),
    body,
    '</svg>',
  ].join('\n');
}
