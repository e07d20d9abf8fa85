/** Diverging blue-white-red colormap centered on zero: negative safety
 * values (inside buffered obstacles) red, positive blue, boundary white. */

export type Rgb = [number, number, number];

const NEG: Rgb = [178, 24, 43];
const MID: Rgb = [245, 245, 245];
const POS: Rgb = [33, 102, 172];

function mix(a: Rgb, b: Rgb, s: number): Rgb {
  return [
    Math.round(a[0] + (b[0] - a[0]) * s),
    Math.round(a[1] + (b[1] - a[1]) * s),
    Math.round(a[2] + (b[2] - a[2]) * s),
  ];
}

/** Map h to a color; scale is the positive value rendered fully saturated. */
export function divergingColor(h: number, scale: number): Rgb {
  if (!(scale > 0)) scale = 1;
  const s = Math.max(-1, Math.min(1, h / scale));
  return s >= 0 ? mix(MID, POS, s) : mix(MID, NEG, -s);
}
