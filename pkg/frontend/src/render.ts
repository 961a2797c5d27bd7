// Renderers: one pure function per chart kind, payload in, HTML string out.
// Every displayed number is read from the service payload; the only
// arithmetic here is pixel placement. Multi-model panels share axes, and
// ordering (variables, rows) always follows the first model's payload.

import {
  AttributionChart,
  CpChart,
  Explanation,
  FairnessChart,
  ImportanceChart,
  PerformanceChart,
  ProfileChart,
  ResidualsChart,
  TreeChart,
  TreeNodeRecord,
} from './types.js';
import {
  axisLine,
  escapeHtml,
  extent,
  fmt,
  linearScale,
  polyline,
  seriesClass,
  svgRoot,
  tag,
  textLabel,
  xTicks,
} from './svg.js';

export type Renderer = (payloads: Explanation[]) => string;

const W = 420;
const PAD = { left: 120, right: 16, top: 18, bottom: 24 };

function legend(payloads: Explanation[]): string {
  if (payloads.length < 2) return '';
  const items = payloads
    .map(
      (p, i) =>
        `<span class="legend-item ${seriesClass(i)}">${escapeHtml(p.model_label)}</span>`
    )
    .join('');
  return `<div class="legend">${items}</div>`;
}

function renderPerformance(payloads: Explanation[]): string {
  const charts = payloads.map((p) => p.chart as unknown as PerformanceChart);
  const names = charts[0].metrics.map((m) => m.name);
  const header = ['metric', ...payloads.map((p) => p.model_label)]
    .map((h) => `<th>${escapeHtml(h)}</th>`)
    .join('');
  const rows = names
    .map((name) => {
      const cells = charts
        .map((c) => {
          const metric = c.metrics.find((m) => m.name === name);
          return `<td>${metric ? fmt(metric.value) : ''}</td>`;
        })
        .join('');
      return `<tr><td>${escapeHtml(name)}</td>${cells}</tr>`;
    })
    .join('');
  return `<table class="metrics"><thead><tr>${header}</tr></thead><tbody>${rows}</tbody></table>`;
}

function renderAttribution(payloads: Explanation[]): string {
  const blocks = payloads.map((payload, index) => {
    const chart = payload.chart as unknown as AttributionChart;
    const rowH = 22;
    const height = PAD.top + (chart.bars.length + 1) * rowH + PAD.bottom;
    const values = [chart.intercept, chart.prediction];
    for (const bar of chart.bars) {
      values.push(bar.cumulative, bar.cumulative - bar.contribution);
      if (bar.samples) values.push(...bar.samples.map((s) => s + chart.intercept));
    }
    const x = linearScale(extent(values), [PAD.left, W - PAD.right]);
    const parts: string[] = [];
    parts.push(axisLine(x(chart.intercept), PAD.top - 6, x(chart.intercept), height - PAD.bottom));
    chart.bars.forEach((bar, i) => {
      const y = PAD.top + i * rowH;
      const from = x(bar.cumulative - bar.contribution);
      const to = x(bar.cumulative);
      parts.push(
        tag('rect', {
          x: Math.min(from, to),
          y,
          width: Math.max(Math.abs(to - from), 0.5),
          height: rowH - 6,
          class: `bar sign${bar.sign === '-' ? 'neg' : bar.sign === '+' ? 'pos' : 'zero'}`,
        })
      );
      parts.push(textLabel(4, y + rowH - 10, bar.label, 'rowlabel'));
      parts.push(textLabel(Math.max(from, to) + 4, y + rowH - 10, fmt(bar.contribution), 'value'));
      if (bar.samples) {
        for (const sample of bar.samples) {
          parts.push(
            tag('circle', {
              cx: x(sample + chart.intercept),
              cy: y + (rowH - 6) / 2,
              r: 1.5,
              class: 'sample',
            })
          );
        }
      }
    });
    const yPred = PAD.top + chart.bars.length * rowH;
    parts.push(textLabel(4, yPred + rowH - 10, 'prediction', 'rowlabel'));
    parts.push(
      tag('rect', {
        x: Math.min(x(chart.intercept), x(chart.prediction)),
        y: yPred,
        width: Math.max(Math.abs(x(chart.prediction) - x(chart.intercept)), 0.5),
        height: rowH - 6,
        class: 'bar total',
      })
    );
    parts.push(textLabel(x(chart.prediction) + 4, yPred + rowH - 10, fmt(chart.prediction), 'value prediction'));
    parts.push(xTicks(x, height - 8));
    const svg = svgRoot(W, height, parts);
    const caption =
      `<div class="caption ${seriesClass(index)}">${escapeHtml(payload.model_label)}: ` +
      `intercept ${fmt(chart.intercept)}, prediction ` +
      `<span class="prediction-value">${fmt(chart.prediction)}</span></div>`;
    return `<figure>${caption}${svg}</figure>`;
  });
  return blocks.join('');
}

function renderCp(payloads: Explanation[]): string {
  const charts = payloads.map((p) => p.chart as unknown as CpChart);
  const first = charts[0];
  const figures = first.panels.map((panel0, panelIndex) => {
    const height = 150;
    const panels = charts.map((c) => c.panels[panelIndex]);
    const ys = panels.flatMap((p) => p.y.concat(p.anchor.y));
    const y = linearScale(extent(ys), [height - PAD.bottom, PAD.top]);
    const parts: string[] = [];
    if (panel0.kind === 'numeric') {
      const xs = panels.flatMap((p) => p.x as number[]);
      const x = linearScale(extent(xs), [PAD.left / 2, W - PAD.right]);
      panels.forEach((panel, i) => {
        parts.push(polyline((panel.x as number[]).map(x), panel.y.map(y), `line ${seriesClass(i)}`));
        parts.push(
          tag('circle', {
            cx: x(panel.anchor.x as number),
            cy: y(panel.anchor.y),
            r: 4,
            class: `anchor ${seriesClass(i)}`,
          })
        );
      });
      parts.push(xTicks(x, height - 8));
    } else {
      const slot = (W - PAD.left / 2 - PAD.right) / panel0.x.length;
      panels.forEach((panel, i) => {
        panel.x.forEach((level, j) => {
          const cx = PAD.left / 2 + slot * j + slot / 2 + i * 6;
          parts.push(tag('circle', { cx, cy: y(panel.y[j]), r: 3.5, class: `dot ${seriesClass(i)}` }));
          if (i === 0) parts.push(textLabel(cx - slot / 4, height - 8, String(level), 'tick'));
          if (level === panel.anchor.x) {
            parts.push(tag('circle', { cx, cy: y(panel.anchor.y), r: 5.5, class: `anchor ${seriesClass(i)}` }));
          }
        });
      });
    }
    const svg = svgRoot(W, height, parts);
    return `<figure><div class="caption">${escapeHtml(panel0.variable)}</div>${svg}</figure>`;
  });
  return legend(payloads) + figures.join('');
}

function renderImportance(payloads: Explanation[]): string {
  const charts = payloads.map((p) => p.chart as unknown as ImportanceChart);
  // Shared ordering: variables as ranked by the first model.
  const order = charts[0].bars.map((b) => b.variable);
  const rowH = 20;
  const height = PAD.top + order.length * rowH * payloads.length + PAD.bottom;
  const values = charts.flatMap((c) => c.bars.flatMap((b) => [b.importance, ...b.dropout.map((d) => d - c.full_model_loss)]));
  const x = linearScale(extent(values.concat(0)), [PAD.left, W - PAD.right]);
  const parts: string[] = [axisLine(x(0), PAD.top - 6, x(0), height - PAD.bottom)];
  order.forEach((variable, row) => {
    charts.forEach((chart, series) => {
      const bar = chart.bars.find((b) => b.variable === variable);
      if (!bar) return;
      const y = PAD.top + (row * payloads.length + series) * rowH;
      parts.push(
        tag('rect', {
          x: Math.min(x(0), x(bar.importance)),
          y,
          width: Math.max(Math.abs(x(bar.importance) - x(0)), 0.5),
          height: rowH - 6,
          class: `bar ${seriesClass(series)}`,
        })
      );
      const spread = extent(bar.dropout.map((d) => d - chart.full_model_loss));
      parts.push(
        tag('line', {
          x1: x(spread[0]),
          x2: x(spread[1]),
          y1: y + (rowH - 6) / 2,
          y2: y + (rowH - 6) / 2,
          class: 'whisker',
        })
      );
      if (series === 0) parts.push(textLabel(4, y + rowH - 9, variable, 'rowlabel'));
      parts.push(textLabel(Math.max(x(0), x(bar.importance)) + 4, y + rowH - 9, fmt(bar.importance), 'value'));
    });
  });
  parts.push(xTicks(x, height - 8));
  const note = charts
    .map(
      (c, i) =>
        `<span class="${seriesClass(i)}">${escapeHtml(payloads[i].model_label)}: ` +
        `${escapeHtml(c.loss)} ${fmt(c.full_model_loss)} (${escapeHtml(c.mode)})</span>`
    )
    .join(' ');
  return `${legend(payloads)}<div class="caption">${note}</div>${svgRoot(W, height, parts)}`;
}

function renderProfile(payloads: Explanation[]): string {
  const charts = payloads.map((p) => p.chart as unknown as ProfileChart);
  const first = charts[0];
  const figures = first.panels.map((panel0, panelIndex) => {
    const height = 150;
    const panels = charts.map((c) => c.panels[panelIndex]);
    const allY = panels.flatMap((p) =>
      p.curves ? p.curves.flatMap((c) => c.y) : (p.y as number[])
    );
    const y = linearScale(extent(allY), [height - PAD.bottom, PAD.top]);
    const parts: string[] = [];
    const numericX = typeof panel0.x[0] === 'number';
    const x = numericX
      ? linearScale(extent(panels.flatMap((p) => p.x as number[])), [PAD.left / 2, W - PAD.right])
      : linearScale([0, panel0.x.length - 1], [PAD.left / 2, W - PAD.right]);
    const xs = (panel: typeof panel0) =>
      numericX ? (panel.x as number[]).map(x) : panel.x.map((_, i) => x(i));
    panels.forEach((panel, i) => {
      if (panel.curves) {
        for (const curve of panel.curves) {
          parts.push(polyline(xs(panel), curve.y.map(y), `ice ${seriesClass(i)}`));
        }
      } else {
        parts.push(polyline(xs(panel), (panel.y as number[]).map(y), `line ${seriesClass(i)}`));
      }
    });
    if (numericX) parts.push(xTicks(x, height - 8));
    else panel0.x.forEach((level, i) => parts.push(textLabel(x(i), height - 8, String(level), 'tick')));
    const svg = svgRoot(W, height, parts);
    const label = `${panel0.variable} (${first.profile_kind})`;
    return `<figure><div class="caption">${escapeHtml(label)}</div>${svg}</figure>`;
  });
  return legend(payloads) + figures.join('');
}

function renderResiduals(payloads: Explanation[]): string {
  const blocks = payloads.map((payload, index) => {
    const chart = payload.chart as unknown as ResidualsChart;
    const height = 170;
    const x = linearScale(extent(chart.points.y_hat), [PAD.left / 2, W - PAD.right]);
    const y = linearScale(extent(chart.points.residual.concat(0)), [height - PAD.bottom, PAD.top]);
    const parts: string[] = [axisLine(x.domain ? x(x.domain[0]) : 0, y(0), W - PAD.right, y(0))];
    chart.points.y_hat.forEach((yh, i) => {
      parts.push(
        tag('circle', { cx: x(yh), cy: y(chart.points.residual[i]), r: 2.5, class: `dot ${seriesClass(index)}` })
      );
    });
    parts.push(xTicks(x, height - 8));
    const scatter = svgRoot(W, height, parts);

    const histHeight = 90;
    const counts = chart.histogram.counts;
    const edges = chart.histogram.edges;
    const hx = linearScale(extent(edges), [PAD.left / 2, W - PAD.right]);
    const hy = linearScale([0, Math.max(...counts, 1)], [histHeight - 14, 6]);
    const bars = counts.map((count, i) =>
      tag('rect', {
        x: hx(edges[i]),
        y: hy(count),
        width: Math.max(hx(edges[i + 1]) - hx(edges[i]) - 1, 0.5),
        height: Math.max(hy(0) - hy(count), 0),
        class: `bar ${seriesClass(index)}`,
      })
    );
    const hist = svgRoot(W, histHeight, bars.concat(xTicks(hx, histHeight - 2)));
    return (
      `<figure><div class="caption">${escapeHtml(payload.model_label)}: residuals vs prediction</div>` +
      `${scatter}${hist}</figure>`
    );
  });
  return blocks.join('');
}

function renderTreeNode(node: TreeNodeRecord): string {
  if (node.leaf_value !== undefined) {
    return `<li class="leaf">value ${fmt(node.leaf_value)} <span class="count">n=${node.n}</span></li>`;
  }
  const condition =
    node.threshold !== undefined
      ? `${node.variable} &le; ${fmt(node.threshold as number)}`
      : `${node.variable} &isin; {${(node.levels ?? []).map(escapeHtml).join(', ')}}`;
  return (
    `<li class="split">${condition}<ul>` +
    renderTreeNode(node.left as TreeNodeRecord) +
    renderTreeNode(node.right as TreeNodeRecord) +
    '</ul></li>'
  );
}

function renderSurrogate(payloads: Explanation[]): string {
  return payloads
    .map((payload) => {
      const chart = payload.chart as unknown as TreeChart;
      return (
        `<figure><div class="caption">${escapeHtml(payload.model_label)}: surrogate tree, ` +
        `fidelity ${fmt(chart.fidelity)}, depth ${chart.depth}</div>` +
        `<ul class="tree">${renderTreeNode(chart.root)}</ul></figure>`
      );
    })
    .join('');
}

function renderFairness(payloads: Explanation[]): string {
  return payloads
    .map((payload) => {
      const chart = payload.chart as unknown as FairnessChart;
      const [lo, hi] = chart.bounds;
      const rowH = 22;
      const height = PAD.top + chart.metrics.length * rowH + PAD.bottom;
      const ratios = chart.metrics.flatMap((m) =>
        m.points.map((p) => p.ratio).filter((r): r is number => r !== null)
      );
      const x = linearScale(extent(ratios.concat([lo, hi])), [PAD.left, W - PAD.right]);
      const parts: string[] = [
        tag('rect', {
          x: x(lo),
          y: PAD.top - 6,
          width: x(hi) - x(lo),
          height: height - PAD.top - PAD.bottom + 6,
          class: 'band',
        }),
        axisLine(x(1), PAD.top - 6, x(1), height - PAD.bottom),
      ];
      chart.metrics.forEach((metric, i) => {
        const yMid = PAD.top + i * rowH + rowH / 2 - 3;
        parts.push(textLabel(4, yMid + 4, metric.metric, 'rowlabel'));
        metric.points.forEach((point) => {
          if (point.ratio === null) return;
          const violation = point.ratio < lo || point.ratio > hi;
          parts.push(
            tag('circle', {
              cx: x(point.ratio),
              cy: yMid,
              r: 4,
              class: violation ? 'dot violation' : 'dot ok',
            }),
            textLabel(x(point.ratio) + 6, yMid + 4, point.subgroup, 'tick')
          );
        });
      });
      parts.push(xTicks(x, height - 8));
      const narrative = chart.narrative
        .map((line) => `<li>${escapeHtml(line)}</li>`)
        .join('');
      return (
        `<figure><div class="caption">${escapeHtml(payload.model_label)}: verdict ` +
        `<strong class="verdict-${escapeHtml(chart.verdict)}">${escapeHtml(chart.verdict)}</strong></div>` +
        svgRoot(W, height, parts) +
        `<ol class="narrative">${narrative}</ol></figure>`
      );
    })
    .join('');
}

export const RENDERERS: Record<string, Renderer> = {
  performance: renderPerformance,
  breakdown: renderAttribution,
  shapley: renderAttribution,
  cp: renderCp,
  importance: renderImportance,
  profile: renderProfile,
  residuals: renderResiduals,
  surrogate: renderSurrogate,
  fairness: renderFairness,
};

/** Render one panel's payloads side by side; unknown kinds get an error card. */
export function renderChart(kind: string, payloads: Explanation[]): string {
  const renderer = RENDERERS[kind];
  if (!renderer) {
    return `<div class="error-card">unknown chart kind: ${escapeHtml(kind)}</div>`;
  }
  return `<div class="chart chart-${escapeHtml(kind)}">${renderer(payloads)}</div>`;
}

export function renderErrorCard(message: string): string {
  return `<div class="error-card">${escapeHtml(message)}</div>`;
}
