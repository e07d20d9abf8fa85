/** Snapshot the renderer reads: latest state, decoded slice, goal marker,
 * connection status, and a 30 s ring of (t, h) samples. Message ingestion
 * mutates the snapshot in O(1); rendering only ever reads it, so a slow
 * frame can never back-pressure the socket. */

import {
  DecodedSlice,
  ServerMessage,
  StatePayload,
  decodeFieldSlice,
} from "./protocol.js";

export const H_HISTORY_SECONDS = 30;
export const SLICE_STALE_MS = 2000;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface HSample {
  t: number;
  h: number;
}

/** Fixed-capacity ring buffer of h(t) samples covering the last 30 s. */
export class HistoryRing {
  private samples: HSample[] = [];

  push(t: number, h: number): void {
    const last = this.samples[this.samples.length - 1];
    if (last !== undefined && t < last.t) {
      this.samples = []; // sim restarted or time jumped backwards
    }
    this.samples.push({ t, h });
    const cutoff = t - H_HISTORY_SECONDS;
    let drop = 0;
    while (drop < this.samples.length && this.samples[drop].t < cutoff) drop++;
    if (drop > 0) this.samples = this.samples.slice(drop);
  }

  get(): readonly HSample[] {
    return this.samples;
  }

  span(): number {
    const s = this.samples;
    return s.length < 2 ? 0 : s[s.length - 1].t - s[0].t;
  }
}

export class ViewModel {
  state: StatePayload | null = null;
  stateSeq = 0;
  slice: DecodedSlice | null = null;
  goal: { x: number; y: number; theta: number } | null = null;
  status: ConnectionStatus = "connecting";
  history = new HistoryRing();
  lastEvent: { level: string; text: string } | null = null;
  decodeErrors = 0;

  /** Apply one parsed server message; later seq always wins. */
  ingest(msg: ServerMessage, now: number = Date.now()): void {
    if (msg.type === "state") {
      if (msg.seq < this.stateSeq) return; // stale frame
      this.stateSeq = msg.seq;
      this.state = msg.payload;
      this.history.push(msg.payload.t, msg.payload.h_value);
    } else if (msg.type === "field_slice") {
      try {
        this.slice = decodeFieldSlice(msg.payload, now);
      } catch {
        this.decodeErrors += 1;
      }
    } else {
      this.lastEvent = msg.payload;
    }
  }

  sliceIsStale(now: number = Date.now()): boolean {
    return this.slice !== null && now - this.slice.receivedAt > SLICE_STALE_MS;
  }
}
