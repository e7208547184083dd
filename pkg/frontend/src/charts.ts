import { binValues } from './bins.js';
import type { ChartDocument, ChartKind } from './types.js';

const SVG_NS = 'http://www.w3.org/2000/svg';

const WIDTH = 480;
const HEIGHT = 280;
const MARGIN = { top: 28, right: 12, bottom: 40, left: 52 };
const PLOT_W = WIDTH - MARGIN.left - MARGIN.right;
const PLOT_H = HEIGHT - MARGIN.top - MARGIN.bottom;

function el(
  doc: Document,
  name: string,
  attrs: Record<string, string | number> = {},
  text?: string,
): SVGElement {
  const node = doc.createElementNS(SVG_NS, name) as SVGElement;
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function frame(doc: Document, chart: ChartDocument): SVGElement {
  const svg = el(doc, 'svg', {
    viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
    width: WIDTH,
    height: HEIGHT,
    role: 'img',
  });
  svg.setAttribute('data-kind', chart.kind);
  svg.appendChild(
    el(doc, 'text', { x: WIDTH / 2, y: 18, 'text-anchor': 'middle',
                      class: 'chart-title' }, chart.title),
  );
  svg.appendChild(
    el(doc, 'text', { x: MARGIN.left + PLOT_W / 2, y: HEIGHT - 6,
                      'text-anchor': 'middle', class: 'axis-label' },
       chart.x_label),
  );
  if (chart.y_label) {
    const label = el(doc, 'text', { x: 14, y: MARGIN.top + PLOT_H / 2,
                                    'text-anchor': 'middle',
                                    class: 'axis-label' }, chart.y_label);
    label.setAttribute(
      'transform', `rotate(-90 14 ${MARGIN.top + PLOT_H / 2})`);
    svg.appendChild(label);
  }
  svg.appendChild(
    el(doc, 'rect', { x: MARGIN.left, y: MARGIN.top, width: PLOT_W,
                      height: PLOT_H, fill: 'none', stroke: '#999',
                      class: 'plot-frame' }),
  );
  return svg;
}

function linear(domainMin: number, domainMax: number,
                rangeMin: number, rangeMax: number) {
  const span = domainMax - domainMin;
  return (v: number) =>
    span === 0
      ? (rangeMin + rangeMax) / 2
      : rangeMin + ((v - domainMin) / span) * (rangeMax - rangeMin);
}

function numericPairs(chart: ChartDocument): Array<[number, number]> {
  const ys = chart.y_values ?? [];
  const pairs: Array<[number, number]> = [];
  chart.x_values.forEach((x, i) => {
    const y = ys[i];
    if (typeof x === 'number' && typeof y === 'number') pairs.push([x, y]);
  });
  return pairs;
}

function renderBar(doc: Document, chart: ChartDocument): SVGElement {
  const svg = frame(doc, chart);
  const labels = chart.x_values.map((v) => String(v));
  const ys = (chart.y_values ?? []).map((v) =>
    typeof v === 'number' ? v : 0);
  const maxY = Math.max(0, ...ys);
  const minY = Math.min(0, ...ys);
  const scaleY = linear(minY, maxY || 1, MARGIN.top + PLOT_H, MARGIN.top);
  const slot = PLOT_W / Math.max(labels.length, 1);
  labels.forEach((label, i) => {
    const y = ys[i] ?? 0;
    const top = Math.min(scaleY(y), scaleY(0));
    svg.appendChild(
      el(doc, 'rect', {
        class: 'bar',
        'data-x': label,
        'data-y': y,
        x: MARGIN.left + i * slot + slot * 0.1,
        y: top,
        width: slot * 0.8,
        height: Math.abs(scaleY(y) - scaleY(0)),
      }),
    );
    svg.appendChild(
      el(doc, 'text', {
        x: MARGIN.left + i * slot + slot / 2,
        y: MARGIN.top + PLOT_H + 14,
        'text-anchor': 'middle',
        class: 'tick-label',
      }, label),
    );
  });
  return svg;
}

function renderScatter(doc: Document, chart: ChartDocument): SVGElement {
  const svg = frame(doc, chart);
  const pairs = numericPairs(chart);
  if (pairs.length === 0) return svg;
  const xs = pairs.map(([x]) => x);
  const ys = pairs.map(([, y]) => y);
  const scaleX = linear(Math.min(...xs), Math.max(...xs),
                        MARGIN.left, MARGIN.left + PLOT_W);
  const scaleY = linear(Math.min(...ys), Math.max(...ys),
                        MARGIN.top + PLOT_H, MARGIN.top);
  for (const [x, y] of pairs) {
    svg.appendChild(
      el(doc, 'circle', { class: 'point', cx: scaleX(x), cy: scaleY(y),
                          r: 3, 'data-x': x, 'data-y': y }),
    );
  }
  return svg;
}

function renderLine(doc: Document, chart: ChartDocument): SVGElement {
  const svg = frame(doc, chart);
  // categorical or numeric x both draw in row order, evenly spaced
  const ys = (chart.y_values ?? []).filter(
    (v): v is number => typeof v === 'number');
  if (ys.length === 0) return svg;
  const scaleX = linear(0, Math.max(ys.length - 1, 1),
                        MARGIN.left, MARGIN.left + PLOT_W);
  const scaleY = linear(Math.min(...ys), Math.max(...ys),
                        MARGIN.top + PLOT_H, MARGIN.top);
  const points = ys
    .map((y, i) => `${scaleX(i)},${scaleY(y)}`)
    .join(' ');
  svg.appendChild(
    el(doc, 'polyline', { class: 'series', points, fill: 'none' }),
  );
  return svg;
}

function renderHistogram(doc: Document, chart: ChartDocument): SVGElement {
  const svg = frame(doc, chart);
  const nums = chart.x_values.filter(
    (v): v is number => typeof v === 'number');
  const bins = binValues(nums);
  if (bins.length === 0) return svg;
  const maxCount = Math.max(...bins.map((b) => b.count));
  const scaleY = linear(0, maxCount || 1, MARGIN.top + PLOT_H, MARGIN.top);
  const slot = PLOT_W / bins.length;
  bins.forEach((bin, i) => {
    svg.appendChild(
      el(doc, 'rect', {
        class: 'bin',
        'data-count': bin.count,
        'data-x0': bin.x0,
        'data-x1': bin.x1,
        x: MARGIN.left + i * slot,
        y: scaleY(bin.count),
        width: slot,
        height: MARGIN.top + PLOT_H - scaleY(bin.count),
      }),
    );
  });
  return svg;
}

const RENDERERS: Record<ChartKind, (d: Document, c: ChartDocument) => SVGElement> = {
  scatter: renderScatter,
  bar: renderBar,
  line: renderLine,
  histogram: renderHistogram,
};

export function renderChart(doc: Document, chart: ChartDocument): SVGElement {
  const renderer = RENDERERS[chart.kind];
  if (!renderer) throw new Error(`unknown chart kind '${chart.kind}'`);
  return renderer(doc, chart);
}
