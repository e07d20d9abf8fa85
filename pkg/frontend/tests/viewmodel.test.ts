import { describe, expect, it } from "vitest";

import { ServerMessage } from "../src/protocol.js";
import {
  H_HISTORY_SECONDS,
  HistoryRing,
  SLICE_STALE_MS,
  ViewModel,
} from "../src/viewmodel.js";

function stateMsg(seq: number, t: number, h = 0.5): ServerMessage {
  return {
    type: "state",
    seq,
    payload: {
      t,
      robot: { x: 0, y: 0, theta: 0 },
      inputs: { v_x: 0, v_y: 0, omega: 0 },
      h_value: h,
      plan: [],
      obstacles: [],
      paused: false,
    },
  };
}

function sliceMsg(seq: number, nx = 2, ny = 2): ServerMessage {
  const data = Buffer.from(new Float32Array(nx * ny).buffer).toString("base64");
  return {
    type: "field_slice",
    seq,
    payload: {
      i_theta: 0,
      i_t: 0,
      nx,
      ny,
      resolution: 0.05,
      origin: [0, 0],
      theta: 0,
      data,
    },
  };
}

describe("HistoryRing", () => {
  it("keeps only the last 30 s of samples", () => {
    const ring = new HistoryRing();
    for (let k = 0; k <= 700; k++) ring.push(k * 0.05, 0.5); // 35 s at 20 Hz
    const samples = ring.get();
    expect(ring.span()).toBeLessThanOrEqual(H_HISTORY_SECONDS);
    expect(samples[0].t).toBeGreaterThanOrEqual(35 - H_HISTORY_SECONDS);
    expect(samples[samples.length - 1].t).toBeCloseTo(35, 9);
  });

  it("resets when time jumps backwards (sim restart)", () => {
    const ring = new HistoryRing();
    ring.push(10, 0.1);
    ring.push(11, 0.1);
    ring.push(0.5, 0.2);
    expect(ring.get()).toHaveLength(1);
    expect(ring.get()[0].t).toBe(0.5);
  });
});

describe("ViewModel", () => {
  it("ingests state and appends history", () => {
    const vm = new ViewModel();
    vm.ingest(stateMsg(1, 0.0, 0.4));
    vm.ingest(stateMsg(2, 0.05, 0.39));
    expect(vm.state?.h_value).toBe(0.39);
    expect(vm.history.get()).toHaveLength(2);
  });

  it("ignores stale out-of-order state frames", () => {
    const vm = new ViewModel();
    vm.ingest(stateMsg(5, 1.0, 0.2));
    vm.ingest(stateMsg(3, 0.5, 0.9));
    expect(vm.state?.h_value).toBe(0.2);
  });

  it("decodes slices and tracks staleness", () => {
    const vm = new ViewModel();
    vm.ingest(sliceMsg(1), 1000);
    expect(vm.slice?.nx).toBe(2);
    expect(vm.sliceIsStale(1000 + SLICE_STALE_MS - 1)).toBe(false);
    expect(vm.sliceIsStale(1000 + SLICE_STALE_MS + 1)).toBe(true);
  });

  it("counts decode failures instead of throwing", () => {
    const vm = new ViewModel();
    const bad = sliceMsg(1, 4, 4);
    if (bad.type === "field_slice") bad.payload.data = "AAAA"; // 3 bytes
    vm.ingest(bad);
    expect(vm.slice).toBeNull();
    expect(vm.decodeErrors).toBe(1);
  });

  it("stores the latest event", () => {
    const vm = new ViewModel();
    vm.ingest({
      type: "event",
      seq: 9,
      payload: { level: "error", text: "goal rejected" },
    });
    expect(vm.lastEvent?.text).toContain("rejected");
  });
});
