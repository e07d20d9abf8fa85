/** Marching-squares zero contour of a scalar grid.
 *
 * The grid is sampled at cell centers (ix * ny + iy layout); segments are
 * returned in grid coordinates (fractional cell indices) so the renderer
 * can map them with the same world transform as the heatmap. */

export interface Segment {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

function lerp(a: number, b: number): number {
  // where the zero crossing sits between two samples of opposite sign
  const d = a - b;
  return d === 0 ? 0.5 : a / d;
}

export function zeroContour(
  values: Float32Array | number[],
  nx: number,
  ny: number,
): Segment[] {
  const v = (ix: number, iy: number) => values[ix * ny + iy];
  const segments: Segment[] = [];
  for (let ix = 0; ix < nx - 1; ix++) {
    for (let iy = 0; iy < ny - 1; iy++) {
      const a = v(ix, iy); // corners of the dual cell
      const b = v(ix + 1, iy);
      const c = v(ix + 1, iy + 1);
      const d = v(ix, iy + 1);
      const idx =
        (a > 0 ? 8 : 0) | (b > 0 ? 4 : 0) | (c > 0 ? 2 : 0) | (d > 0 ? 1 : 0);
      if (idx === 0 || idx === 15) continue;
      // edge interpolation points (grid coordinates)
      const top = { x: ix + lerp(a, b), y: iy };
      const right = { x: ix + 1, y: iy + lerp(b, c) };
      const bottom = { x: ix + lerp(d, c), y: iy + 1 };
      const left = { x: ix, y: iy + lerp(a, d) };
      const emit = (p: { x: number; y: number }, q: { x: number; y: number }) =>
        segments.push({ x0: p.x, y0: p.y, x1: q.x, y1: q.y });
      switch (idx) {
        case 1:
        case 14:
          emit(left, bottom);
          break;
        case 2:
        case 13:
          emit(bottom, right);
          break;
        case 3:
        case 12:
          emit(left, right);
          break;
        case 4:
        case 11:
          emit(top, right);
          break;
        case 5: // saddle: resolve by the cell-center average
        case 10: {
          const center = (a + b + c + d) / 4;
          const flip = (center > 0) === (idx === 5);
          if (flip) {
            emit(left, top);
            emit(bottom, right);
          } else {
            emit(left, bottom);
            emit(top, right);
          }
          break;
        }
        case 6:
        case 9:
          emit(top, bottom);
          break;
        case 7:
        case 8:
          emit(left, top);
          break;
      }
    }
  }
  return segments;
}
