/** Pointer/keyboard gestures to wire messages.
 *
 * Pure state machine over world coordinates so it is testable without a
 * DOM: the canvas layer converts pixels to world points and feeds
 * down/move/up here. Goal drags stream coalesced goal messages (the server
 * keeps only the latest); a click-drag on empty space spawns an obstacle
 * whose velocity is the drag vector over the drag duration; space toggles
 * pause. A disconnected outbox queues at most 10 messages, then drops. */

import {
  ClientMessage,
  goalMessage,
  pauseMessage,
  resumeMessage,
  spawnMessage,
} from "./protocol.js";

export const GOAL_HIT_RADIUS = 0.3; // m: press this close to grab the goal
export const DRAG_DEAD_ZONE = 0.05; // m: shorter drags spawn nothing
export const GOAL_STREAM_MS = 50; // min spacing of streamed goal updates
export const OUTBOX_LIMIT = 10;

export interface GestureContext {
  goal: { x: number; y: number; theta: number } | null;
  paused: boolean;
}

type Drag =
  | { kind: "goal"; lastSent: number }
  | { kind: "spawn"; x0: number; y0: number; t0: number };

export class GestureTracker {
  private drag: Drag | null = null;

  /** now is ms; world coordinates in meters. */
  down(x: number, y: number, now: number, ctx: GestureContext): ClientMessage[] {
    const g = ctx.goal;
    if (g && Math.hypot(x - g.x, y - g.y) <= GOAL_HIT_RADIUS) {
      this.drag = { kind: "goal", lastSent: -Infinity };
    } else {
      this.drag = { kind: "spawn", x0: x, y0: y, t0: now };
    }
    return [];
  }

  move(x: number, y: number, now: number, ctx: GestureContext): ClientMessage[] {
    if (this.drag?.kind !== "goal") return [];
    if (now - this.drag.lastSent < GOAL_STREAM_MS) return [];
    this.drag.lastSent = now;
    const theta = ctx.goal?.theta ?? 0;
    return [goalMessage(x, y, theta)];
  }

  up(x: number, y: number, now: number, ctx: GestureContext): ClientMessage[] {
    const drag = this.drag;
    this.drag = null;
    if (drag == null) return [];
    if (drag.kind === "goal") {
      const theta = ctx.goal?.theta ?? 0;
      return [goalMessage(x, y, theta)];
    }
    const dx = x - drag.x0;
    const dy = y - drag.y0;
    if (Math.hypot(dx, dy) < DRAG_DEAD_ZONE) return [];
    const dt = Math.max((now - drag.t0) / 1000, 0.05);
    return [spawnMessage(drag.x0, drag.y0, dx / dt, dy / dt)];
  }

  space(ctx: GestureContext): ClientMessage[] {
    return [ctx.paused ? resumeMessage() : pauseMessage()];
  }

  dragging(): boolean {
    return this.drag !== null;
  }
}

/** Bounded outbound queue: sends straight through while connected, holds up
 * to OUTBOX_LIMIT messages across a disconnect, then drops (flagged so the
 * UI can show a banner). */
export class Outbox {
  dropped = 0;
  private queue: ClientMessage[] = [];
  private connected = false;

  constructor(private send: (text: string) => void) {}

  setConnected(connected: boolean): void {
    this.connected = connected;
    if (connected) {
      for (const msg of this.queue) this.send(JSON.stringify(msg));
      this.queue = [];
    }
  }

  post(messages: ClientMessage[]): void {
    for (const msg of messages) {
      if (this.connected) {
        this.send(JSON.stringify(msg));
      } else if (this.queue.length < OUTBOX_LIMIT) {
        this.queue.push(msg);
      } else {
        this.dropped += 1;
      }
    }
  }

  pending(): number {
    return this.queue.length;
  }
}
