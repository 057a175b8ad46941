/**
 * Supervisor dashboard sparkline: valence/arousal over the last N
 * client messages, rendered as an SVG polyline path.
 */

export const SPARKLINE_WINDOW = 20;

export class ScaleHistory {
  private readonly values: number[] = [];

  constructor(private readonly window: number = SPARKLINE_WINDOW) {}

  push(value: number): void {
    this.values.push(value);
    if (this.values.length > this.window) this.values.shift();
  }

  recent(): number[] {
    return [...this.values];
  }
}

/** Map values in [-1, 1] onto an SVG path of the given viewport. */
export function sparklinePath(values: number[], width = 120, height = 28): string {
  if (values.length === 0) return "";
  const pad = 2;
  const innerH = height - 2 * pad;
  const step = values.length > 1 ? (width - 2 * pad) / (values.length - 1) : 0;
  return values
    .map((v, i) => {
      const x = pad + i * step;
      const y = pad + ((1 - v) / 2) * innerH; // +1 at top, -1 at bottom
      return `${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`;
    })
    .join(" ");
}
