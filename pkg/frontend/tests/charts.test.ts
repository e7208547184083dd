import { Window } from 'happy-dom';
import { describe, expect, it } from 'vitest';

import { binValues, DEFAULT_BIN_COUNT } from '../src/bins.js';
import { renderChart } from '../src/charts.js';
import type { ChartDocument } from '../src/types.js';

const doc = new Window().document as unknown as Document;

describe('binValues', () => {
  it('uses 20 bins by default and keeps every value', () => {
    const values = Array.from({ length: 100 }, (_, i) => i);
    const bins = binValues(values);
    expect(bins).toHaveLength(DEFAULT_BIN_COUNT);
    expect(bins.reduce((acc, b) => acc + b.count, 0)).toBe(100);
    expect(bins.every((b) => b.count === 5)).toBe(true);
  });

  it('puts the max value in the last bin', () => {
    const bins = binValues([0, 10], 10);
    expect(bins[9]!.count).toBe(1);
    expect(bins[0]!.count).toBe(1);
  });

  it('collapses identical values into one bin', () => {
    expect(binValues([3, 3, 3])).toEqual([{ x0: 3, x1: 3, count: 3 }]);
  });

  it('ignores non-finite values and handles empty input', () => {
    expect(binValues([])).toEqual([]);
    expect(binValues([NaN, Infinity])).toEqual([]);
  });

  it('rejects a nonsensical bin count', () => {
    expect(() => binValues([1, 2], 0)).toThrowError(/bin count/);
  });
});

describe('renderChart', () => {
  const barDoc: ChartDocument = {
    kind: 'bar',
    title: 'drugs',
    x_label: 'drug',
    x_values: ['aspirin', 'heparin', 'insulin'],
    y_label: 'COUNT(*)',
    y_values: [5, 4, 3],
  };

  it('renders one bar per category with data attributes', () => {
    const svg = renderChart(doc, barDoc);
    expect(svg.getAttribute('data-kind')).toBe('bar');
    const bars = svg.querySelectorAll('rect.bar');
    expect(bars).toHaveLength(3);
    expect(bars[0]!.getAttribute('data-x')).toBe('aspirin');
    expect(bars[0]!.getAttribute('data-y')).toBe('5');
    const labels = Array.from(svg.querySelectorAll('text.tick-label')).map(
      (t) => t.textContent,
    );
    expect(labels).toEqual(['aspirin', 'heparin', 'insulin']);
  });

  it('renders a scatter point per numeric pair, skipping nulls', () => {
    const svg = renderChart(doc, {
      kind: 'scatter',
      title: 's',
      x_label: 'x',
      x_values: [1, 2, null, 4],
      y_label: 'y',
      y_values: [10, null, 30, 40],
    });
    expect(svg.querySelectorAll('circle.point')).toHaveLength(2);
  });

  it('renders a line as a single polyline over the series', () => {
    const svg = renderChart(doc, {
      kind: 'line',
      title: 'l',
      x_label: 't',
      x_values: ['a', 'b', 'c', 'd'],
      y_label: 'v',
      y_values: [1, 3, 2, 5],
    });
    const series = svg.querySelectorAll('polyline.series');
    expect(series).toHaveLength(1);
    expect(series[0]!.getAttribute('points')!.split(' ')).toHaveLength(4);
  });

  it('renders a histogram with 20 bins for 100 values', () => {
    const svg = renderChart(doc, {
      kind: 'histogram',
      title: 'h',
      x_label: 'age',
      x_values: Array.from({ length: 100 }, (_, i) => i),
    });
    expect(svg.querySelectorAll('rect.bin')).toHaveLength(20);
  });

  it('shows title and axis labels', () => {
    const svg = renderChart(doc, barDoc);
    expect(svg.querySelector('text.chart-title')!.textContent).toBe('drugs');
    const axes = Array.from(svg.querySelectorAll('text.axis-label')).map(
      (t) => t.textContent,
    );
    expect(axes).toEqual(['drug', 'COUNT(*)']);
  });

  it('rejects an unknown kind', () => {
    const bogus = { ...barDoc, kind: 'pie' } as unknown as ChartDocument;
    expect(() => renderChart(doc, bogus)).toThrowError(/unknown chart kind/);
  });
});
