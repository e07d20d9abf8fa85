/** Canvas rendering: heatmap of the field slice with its zero contour,
 * robot footprint at the true heading, plan polyline, goal marker,
 * obstacles, and the h(t) strip chart.
 *
 * Pure pixel/geometry helpers are separated from the canvas calls so the
 * test suite can verify them headlessly. */

import { divergingColor } from "./colormap.js";
import { Segment, zeroContour } from "./contour.js";
import { DecodedSlice, FootprintJson, StatePayload } from "./protocol.js";
import { ViewModel } from "./viewmodel.js";

export interface WorldTransform {
  originX: number;
  originY: number;
  extentX: number; // m
  extentY: number; // m
  pxPerMeter: number;
  canvasHeight: number;
}

export function makeTransform(
  slice: { origin: [number, number]; nx: number; ny: number; resolution: number },
  width: number,
  height: number,
): WorldTransform {
  const extentX = (slice.nx - 1) * slice.resolution;
  const extentY = (slice.ny - 1) * slice.resolution;
  const pxPerMeter = Math.min(width / extentX, height / extentY);
  return {
    originX: slice.origin[0],
    originY: slice.origin[1],
    extentX,
    extentY,
    pxPerMeter,
    canvasHeight: height,
  };
}

export function worldToCanvas(
  tf: WorldTransform,
  x: number,
  y: number,
): [number, number] {
  // y up in world, down on canvas
  return [
    (x - tf.originX) * tf.pxPerMeter,
    tf.canvasHeight - (y - tf.originY) * tf.pxPerMeter,
  ];
}

export function canvasToWorld(
  tf: WorldTransform,
  px: number,
  py: number,
): [number, number] {
  return [
    tf.originX + px / tf.pxPerMeter,
    tf.originY + (tf.canvasHeight - py) / tf.pxPerMeter,
  ];
}

/** RGBA pixels of the heatmap at slice resolution (one pixel per cell,
 * row-major with iy flipped so north is up). */
export function sliceToPixels(
  slice: DecodedSlice,
  scale: number,
): Uint8ClampedArray<ArrayBuffer> {
  const { nx, ny, values } = slice;
  const out = new Uint8ClampedArray(new ArrayBuffer(nx * ny * 4));
  for (let iy = 0; iy < ny; iy++) {
    const row = ny - 1 - iy; // image row 0 is the top (max y)
    for (let ix = 0; ix < nx; ix++) {
      const [r, g, b] = divergingColor(values[ix * ny + iy], scale);
      const o = 4 * (row * nx + ix);
      out[o] = r;
      out[o + 1] = g;
      out[o + 2] = b;
      out[o + 3] = 255;
    }
  }
  return out;
}

/** Saturation scale for the colormap: 95th percentile of positive values. */
export function colorScale(values: Float32Array): number {
  const pos = Array.from(values).filter((v) => v > 0).sort((a, b) => a - b);
  if (pos.length === 0) return 1;
  return pos[Math.min(pos.length - 1, Math.floor(0.95 * pos.length))];
}

export function footprintOutline(
  shape: FootprintJson,
  x: number,
  y: number,
  theta: number,
  n = 32,
): [number, number][] {
  const c = Math.cos(theta);
  const s = Math.sin(theta);
  const place = (lx: number, ly: number): [number, number] => [
    x + c * lx - s * ly,
    y + s * lx + c * ly,
  ];
  if (shape.kind === "ellipse") {
    const pts: [number, number][] = [];
    for (let k = 0; k < n; k++) {
      const a = (2 * Math.PI * k) / n;
      pts.push(place(shape.a * Math.cos(a), shape.b * Math.sin(a)));
    }
    return pts;
  }
  return shape.vertices.map(([lx, ly]) => place(lx, ly));
}

// ---- canvas drawing ------------------------------------------------------

function strokePoly(
  ctx: CanvasRenderingContext2D,
  tf: WorldTransform,
  pts: [number, number][],
  close: boolean,
): void {
  if (pts.length === 0) return;
  ctx.beginPath();
  const [x0, y0] = worldToCanvas(tf, pts[0][0], pts[0][1]);
  ctx.moveTo(x0, y0);
  for (let i = 1; i < pts.length; i++) {
    const [x, y] = worldToCanvas(tf, pts[i][0], pts[i][1]);
    ctx.lineTo(x, y);
  }
  if (close) ctx.closePath();
  ctx.stroke();
}

function drawContour(
  ctx: CanvasRenderingContext2D,
  tf: WorldTransform,
  slice: DecodedSlice,
  segments: Segment[],
): void {
  ctx.strokeStyle = "#111";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  for (const seg of segments) {
    const [x0, y0] = worldToCanvas(
      tf,
      slice.origin[0] + seg.x0 * slice.resolution,
      slice.origin[1] + seg.y0 * slice.resolution,
    );
    const [x1, y1] = worldToCanvas(
      tf,
      slice.origin[0] + seg.x1 * slice.resolution,
      slice.origin[1] + seg.y1 * slice.resolution,
    );
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
  }
  ctx.stroke();
}

function drawState(
  ctx: CanvasRenderingContext2D,
  tf: WorldTransform,
  state: StatePayload,
  footprint: FootprintJson | null,
  goal: { x: number; y: number } | null,
): void {
  for (const ob of state.obstacles) {
    ctx.strokeStyle = "#7a2048";
    ctx.lineWidth = 2;
    strokePoly(ctx, tf, footprintOutline(ob.shape, ob.x, ob.y, ob.theta), true);
  }
  if (state.plan.length > 1) {
    ctx.strokeStyle = "#0a7";
    ctx.lineWidth = 2;
    strokePoly(ctx, tf, state.plan.map((p) => [p[0], p[1]]), false);
  }
  const r = state.robot;
  ctx.strokeStyle = "#024";
  ctx.lineWidth = 2.5;
  if (footprint) {
    strokePoly(ctx, tf, footprintOutline(footprint, r.x, r.y, r.theta), true);
  }
  // heading tick
  ctx.beginPath();
  const [cx, cy] = worldToCanvas(tf, r.x, r.y);
  const [hx, hy] = worldToCanvas(
    tf,
    r.x + 0.3 * Math.cos(r.theta),
    r.y + 0.3 * Math.sin(r.theta),
  );
  ctx.moveTo(cx, cy);
  ctx.lineTo(hx, hy);
  ctx.stroke();
  if (goal) {
    const [gx, gy] = worldToCanvas(tf, goal.x, goal.y);
    ctx.strokeStyle = "#d80";
    ctx.lineWidth = 2.5;
    ctx.beginPath();
    ctx.arc(gx, gy, 7, 0, 2 * Math.PI);
    ctx.stroke();
    ctx.beginPath();
    ctx.moveTo(gx - 10, gy);
    ctx.lineTo(gx + 10, gy);
    ctx.moveTo(gx, gy - 10);
    ctx.lineTo(gx, gy + 10);
    ctx.stroke();
  }
}

export function drawStripChart(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  width: number,
  height: number,
): void {
  ctx.fillStyle = "#fff";
  ctx.fillRect(0, 0, width, height);
  const samples = vm.history.get();
  if (samples.length < 2) return;
  const t1 = samples[samples.length - 1].t;
  const t0 = t1 - 30;
  let hMax = 0.1;
  let hMin = -0.02;
  for (const s of samples) {
    hMax = Math.max(hMax, s.h);
    hMin = Math.min(hMin, s.h);
  }
  const tx = (t: number) => ((t - t0) / 30) * width;
  const hy = (h: number) => height - ((h - hMin) / (hMax - hMin)) * height;
  // zero line
  ctx.strokeStyle = "#999";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.moveTo(0, hy(0));
  ctx.lineTo(width, hy(0));
  ctx.stroke();
  const h = vm.state?.h_value ?? 0;
  ctx.strokeStyle = h > 0 ? "#0a7" : "#c22";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(tx(samples[0].t), hy(samples[0].h));
  for (const s of samples) ctx.lineTo(tx(s.t), hy(s.h));
  ctx.stroke();
}

export interface FrameExtras {
  footprint: FootprintJson | null;
}

/** One frame: heatmap + contour when a slice exists, otherwise an
 * occupancy-free "awaiting field" view; always the live state overlay. */
export function renderFrame(
  ctx: CanvasRenderingContext2D,
  vm: ViewModel,
  width: number,
  height: number,
  extras: FrameExtras,
  now: number = Date.now(),
): void {
  ctx.fillStyle = "#e8e8e8";
  ctx.fillRect(0, 0, width, height);
  const slice = vm.slice;
  if (slice === null) {
    ctx.fillStyle = "#555";
    ctx.font = "16px sans-serif";
    ctx.fillText("awaiting field…", 12, 24);
    if (vm.state) {
      const tf: WorldTransform = {
        originX: 0,
        originY: 0,
        extentX: width / 80,
        extentY: height / 80,
        pxPerMeter: 80,
        canvasHeight: height,
      };
      drawState(ctx, tf, vm.state, extras.footprint, vm.goal);
    }
    return;
  }
  const tf = makeTransform(slice, width, height);
  const pixels = sliceToPixels(slice, colorScale(slice.values));
  const image = new ImageData(pixels, slice.nx, slice.ny);
  // draw at cell resolution, then scale up
  const off = new OffscreenCanvas(slice.nx, slice.ny);
  const octx = off.getContext("2d")!;
  octx.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(
    off,
    0,
    0,
    tf.extentX * tf.pxPerMeter,
    tf.extentY * tf.pxPerMeter,
  );
  drawContour(ctx, tf, slice, zeroContour(slice.values, slice.nx, slice.ny));
  if (vm.sliceIsStale(now)) {
    ctx.fillStyle = "rgba(128,128,128,0.55)";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#333";
    ctx.font = "14px sans-serif";
    ctx.fillText("field stale", 12, 24);
  }
  if (vm.state) drawState(ctx, tf, vm.state, extras.footprint, vm.goal);
  ctx.fillStyle = "#333";
  ctx.font = "13px sans-serif";
  const status =
    vm.status === "open"
      ? vm.state?.paused
        ? "paused"
        : "live"
      : vm.status;
  ctx.fillText(
    `${status}   h=${vm.state ? vm.state.h_value.toFixed(3) : "?"}   ` +
      `θ-slice ${slice.theta.toFixed(2)}`,
    12,
    height - 10,
  );
}
