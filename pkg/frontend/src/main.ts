/** Dashboard entry point: connects to the teleop service, pumps messages
 * into the ViewModel, and renders on animation frames. Assets can be served
 * from anywhere; point at a non-default server with ?server=host:port. */

import { GestureTracker, Outbox } from "./gestures.js";
import { FootprintJson, parseServerMessage } from "./protocol.js";
import { canvasToWorld, makeTransform, renderFrame, drawStripChart } from "./render.js";
import { ViewModel } from "./viewmodel.js";

const params = new URLSearchParams(window.location.search);
const server = params.get("server") ?? window.location.host;

const canvas = document.getElementById("map") as HTMLCanvasElement;
const strip = document.getElementById("strip") as HTMLCanvasElement;
const banner = document.getElementById("banner") as HTMLDivElement;
const ctx = canvas.getContext("2d")!;
const sctx = strip.getContext("2d")!;

const vm = new ViewModel();
const gestures = new GestureTracker();
let footprint: FootprintJson | null = null;
let ws: WebSocket | null = null;
const outbox = new Outbox((text) => ws?.send(text));

fetch(`http://${server}/scenario`)
  .then((r) => r.json())
  .then((scenario) => {
    footprint = scenario.footprint as FootprintJson;
  })
  .catch(() => {
    banner.textContent = "scenario fetch failed; footprint hidden";
  });

function connect(): void {
  vm.status = "connecting";
  ws = new WebSocket(`ws://${server}/ws`);
  ws.onopen = () => {
    vm.status = "open";
    outbox.setConnected(true);
    banner.textContent = "";
  };
  ws.onmessage = (ev) => {
    const { msg } = parseServerMessage(String(ev.data));
    if (msg === null) return;
    vm.ingest(msg);
    if (msg.type === "event" && msg.payload.level === "error") {
      banner.textContent = msg.payload.text;
    }
  };
  ws.onclose = () => {
    vm.status = "closed";
    outbox.setConnected(false);
    banner.textContent = "disconnected — retrying…";
    setTimeout(connect, 1000);
  };
}
connect();

function gestureContext() {
  return {
    goal: vm.goal ?? (vm.state ? { ...vm.state.robot } : null),
    paused: vm.state?.paused ?? false,
  };
}

function toWorld(ev: PointerEvent): [number, number] | null {
  if (vm.slice === null) return null;
  const rect = canvas.getBoundingClientRect();
  const tf = makeTransform(vm.slice, canvas.width, canvas.height);
  return canvasToWorld(tf, ev.clientX - rect.left, ev.clientY - rect.top);
}

canvas.addEventListener("pointerdown", (ev) => {
  const w = toWorld(ev);
  if (!w) return;
  canvas.setPointerCapture(ev.pointerId);
  outbox.post(gestures.down(w[0], w[1], performance.now(), gestureContext()));
});
canvas.addEventListener("pointermove", (ev) => {
  const w = toWorld(ev);
  if (!w || !gestures.dragging()) return;
  const msgs = gestures.move(w[0], w[1], performance.now(), gestureContext());
  for (const m of msgs) {
    if (m.type === "goal") {
      vm.goal = {
        x: m.payload.x as number,
        y: m.payload.y as number,
        theta: m.payload.theta as number,
      };
    }
  }
  outbox.post(msgs);
});
canvas.addEventListener("pointerup", (ev) => {
  const w = toWorld(ev);
  if (!w) return;
  const msgs = gestures.up(w[0], w[1], performance.now(), gestureContext());
  for (const m of msgs) {
    if (m.type === "goal") {
      vm.goal = {
        x: m.payload.x as number,
        y: m.payload.y as number,
        theta: m.payload.theta as number,
      };
    }
  }
  outbox.post(msgs);
});
window.addEventListener("keydown", (ev) => {
  if (ev.code === "Space") {
    ev.preventDefault();
    outbox.post(gestures.space(gestureContext()));
  }
});

const rhoInput = document.getElementById("rho") as HTMLInputElement | null;
const nInput = document.getElementById("horizon") as HTMLInputElement | null;
const applyBtn = document.getElementById("apply") as HTMLButtonElement | null;
applyBtn?.addEventListener("click", async () => {
  const { setParamsMessage } = await import("./protocol.js");
  const payload: { rho?: number; N?: number } = {};
  if (rhoInput?.value) payload.rho = Number(rhoInput.value);
  if (nInput?.value) payload.N = Number(nInput.value);
  outbox.post([setParamsMessage(payload)]);
});

function frame(): void {
  renderFrame(ctx, vm, canvas.width, canvas.height, { footprint });
  drawStripChart(sctx, vm, strip.width, strip.height);
  if (outbox.dropped > 0) {
    banner.textContent = `${outbox.dropped} messages dropped while offline`;
  }
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);
