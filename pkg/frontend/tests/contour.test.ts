import { describe, expect, it } from "vitest";

import { zeroContour } from "../src/contour.js";

describe("zeroContour", () => {
  it("is empty on a single-sign field", () => {
    expect(zeroContour(new Float32Array(16).fill(1), 4, 4)).toEqual([]);
    expect(zeroContour(new Float32Array(16).fill(-1), 4, 4)).toEqual([]);
  });

  it("draws a closed loop around one positive cell", () => {
    const nx = 5;
    const ny = 5;
    const v = new Float32Array(nx * ny).fill(-1);
    v[2 * ny + 2] = 1;
    const segs = zeroContour(v, nx, ny);
    expect(segs).toHaveLength(4); // a diamond around (2, 2)
    // crossings sit exactly halfway between the +-1 samples
    for (const s of segs) {
      for (const [x, y] of [[s.x0, s.y0], [s.x1, s.y1]] as const) {
        expect(Math.abs(x - 2) + Math.abs(y - 2)).toBeCloseTo(0.5, 12);
      }
    }
  });

  it("places the crossing by linear interpolation", () => {
    // 1D ramp: values -1, 3 along x -> crossing at 1/4
    const v = new Float32Array([-1, -1, 3, 3]); // nx=2, ny=2
    const segs = zeroContour(v, 2, 2);
    expect(segs).toHaveLength(1);
    expect(segs[0].x0).toBeCloseTo(0.25, 12);
    expect(segs[0].x1).toBeCloseTo(0.25, 12);
  });

  it("every segment endpoint lies on a sign-change edge (random fields)", () => {
    // deterministic LCG so the test is reproducible
    let s = 12345;
    const rand = () => {
      s = (s * 48271) % 2147483647;
      return s / 2147483647 - 0.5;
    };
    for (let trial = 0; trial < 20; trial++) {
      const nx = 8;
      const ny = 8;
      const v = new Float32Array(nx * ny);
      for (let i = 0; i < v.length; i++) v[i] = rand();
      const at = (x: number, y: number) => v[x * ny + y];
      for (const seg of zeroContour(v, nx, ny)) {
        for (const [x, y] of [[seg.x0, seg.y0], [seg.x1, seg.y1]] as const) {
          // endpoint is on a lattice edge: one coordinate integral
          const xInt = Number.isInteger(x);
          const yInt = Number.isInteger(y);
          expect(xInt || yInt).toBe(true);
          if (xInt && !yInt) {
            const a = at(x, Math.floor(y));
            const b = at(x, Math.ceil(y));
            expect((a > 0) !== (b > 0)).toBe(true);
          } else if (yInt && !xInt) {
            const a = at(Math.floor(x), y);
            const b = at(Math.ceil(x), y);
            expect((a > 0) !== (b > 0)).toBe(true);
          }
        }
      }
    }
  });
});
