// Tiny declarative SVG layer: pure string builders, no DOM dependency, so
// renderers are snapshot-testable under plain node.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function fmt(value: number): string {
  if (!Number.isFinite(value)) return String(value);
  if (value === 0) return '0';
  const abs = Math.abs(value);
  if (abs >= 1e6 || abs < 1e-4) return value.toExponential(3);
  return String(Number(value.toPrecision(6)));
}

export interface Scale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  let [d0, d1] = domain;
  if (d0 === d1) {
    d0 -= 1;
    d1 += 1;
  }
  const f = ((value: number) =>
    range[0] + ((value - d0) / (d1 - d0)) * (range[1] - range[0])) as Scale;
  f.domain = [d0, d1];
  return f;
}

export function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === Infinity) return [0, 1];
  return [lo, hi];
}

export function tag(
  name: string,
  attrs: Record<string, string | number>,
  children = ''
): string {
  const rendered = Object.entries(attrs)
    .map(([key, value]) => `${key}="${typeof value === 'number' ? round2(value) : escapeHtml(value)}"`)
    .join(' ');
  return children === '' && name !== 'text'
    ? `<${name} ${rendered}/>`
    : `<${name} ${rendered}>${children}</${name}>`;
}

function round2(value: number): string {
  return String(Math.round(value * 100) / 100);
}

export function svgRoot(width: number, height: number, children: string[]): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" ` +
    `width="${width}" height="${height}">` +
    children.join('') +
    '</svg>'
  );
}

export function polyline(xs: number[], ys: number[], cls: string): string {
  const points = xs.map((x, i) => `${round2(x)},${round2(ys[i])}`).join(' ');
  return `<polyline class="${cls}" fill="none" points="${points}"/>`;
}

export function textLabel(x: number, y: number, content: string, cls = 'label'): string {
  return tag('text', { x, y, class: cls }, escapeHtml(content));
}

export function axisLine(x1: number, y1: number, x2: number, y2: number): string {
  return tag('line', { x1, y1, x2, y2, class: 'axis' });
}

/** Three reference ticks (min, mid, max) along a horizontal axis. */
export function xTicks(scale: Scale, y: number): string {
  const [d0, d1] = scale.domain;
  return [d0, (d0 + d1) / 2, d1]
    .map((v) => textLabel(scale(v), y, fmt(v), 'tick'))
    .join('');
}

export const SERIES_CLASSES = ['s0', 's1', 's2', 's3', 's4', 's5'];

export function seriesClass(index: number): string {
  return SERIES_CLASSES[index % SERIES_CLASSES.length];
}
