export interface Bin {
  x0: number;
  x1: number;
  count: number;
}

export const DEFAULT_BIN_COUNT = 20;

// Equal-width bins over [min, max]; the last bin includes the max so
// every value lands somewhere.
export function binValues(
  values: number[],
  binCount = DEFAULT_BIN_COUNT,
): Bin[] {
  if (binCount < 1) throw new Error(`bin count must be >= 1, got ${binCount}`);
  const nums = values.filter((v) => Number.isFinite(v));
  if (nums.length === 0) return [];
  const min = Math.min(...nums);
  const max = Math.max(...nums);
  if (min === max) {
    return [{ x0: min, x1: max, count: nums.length }];
  }
  const width = (max - min) / binCount;
  const bins: Bin[] = Array.from({ length: binCount }, (_, i) => ({
    x0: min + i * width,
    x1: min + (i + 1) * width,
    count: 0,
  }));
  for (const v of nums) {
    const i = Math.min(Math.floor((v - min) / width), binCount - 1);
    bins[i]!.count += 1;
  }
  return bins;
}
