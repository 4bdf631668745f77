/**
 * The single view model every socket callback mutates and every animation
 * tick reads. Poses and latency figures come only from telemetry frames,
 * verbatim; the client adds nothing but trails and bookkeeping.
 */

import type {
  AckFrame, EventFrame, LatencyStats, ServerFrame, TelemetryFrame, Vec3,
} from "./protocol.js";

export type Connection = "connecting" | "connected" | "disconnected";

export const BLOCK_FEED_LIMIT = 20;
export const TRAIL_LIMIT = 240;

export interface DroneView {
  id: string;
  chainPose: Vec3;
  truePose: Vec3;
  chainTrail: Vec3[];
  trueTrail: Vec3[];
}

export class ClientView {
  connection: Connection = "connecting";
  mode: string = "scripted";
  selected: string | null = null;
  drones = new Map<string, DroneView>();
  latency: LatencyStats | null = null;
  block = 0;
  tNs = 0;
  blockFeed: EventFrame[] = [];
  lastAck: AckFrame | null = null;
  inputVector: Vec3 = [0, 0, 0];

  applyFrame(frame: ServerFrame): void {
    switch (frame.type) {
      case "telemetry":
        this.applyTelemetry(frame);
        break;
      case "event":
        this.applyEvent(frame);
        break;
      case "ack":
        this.lastAck = frame;
        if (frame.ok && frame.detail.startsWith("mode ")) {
          this.mode = frame.detail.slice("mode ".length);
        }
        break;
    }
  }

  private applyTelemetry(frame: TelemetryFrame): void {
    this.tNs = frame.t_ns;
    this.block = Math.max(this.block, frame.block);
    this.latency = frame.latency_ms; // displayed verbatim, never recomputed
    const seen = new Set<string>();
    for (const d of frame.drones) {
      seen.add(d.id);
      let dv = this.drones.get(d.id);
      if (dv === undefined) {
        dv = { id: d.id, chainPose: d.chain_pose, truePose: d.true_pose,
               chainTrail: [], trueTrail: [] };
        this.drones.set(d.id, dv);
      }
      dv.chainPose = d.chain_pose;
      dv.truePose = d.true_pose;
      pushTrail(dv.chainTrail, d.chain_pose);
      pushTrail(dv.trueTrail, d.true_pose);
    }
    for (const id of this.drones.keys()) {
      if (!seen.has(id)) this.drones.delete(id);
    }
    if (this.selected !== null && !this.drones.has(this.selected)) {
      this.selected = null;
    }
  }

  private applyEvent(frame: EventFrame): void {
    this.blockFeed.push(frame);
    if (this.blockFeed.length > BLOCK_FEED_LIMIT) {
      this.blockFeed.splice(0, this.blockFeed.length - BLOCK_FEED_LIMIT);
    }
    this.block = Math.max(this.block, frame.block);
  }

  setConnection(state: Connection): void {
    this.connection = state;
  }

  select(id: string | null): void {
    this.selected = id;
  }

  /** Record what the operator is commanding, for the HUD only. The unit
   *  bound mirrors the tracker's own normalization. */
  setInput(v: Vec3): void {
    const mag = Math.hypot(v[0], v[1], v[2]);
    this.inputVector = mag > 1 ? [v[0] / mag, v[1] / mag, v[2] / mag] : v;
  }

  droneIds(): string[] {
    return [...this.drones.keys()].sort();
  }
}

function pushTrail(trail: Vec3[], p: Vec3): void {
  trail.push(p);
  if (trail.length > TRAIL_LIMIT) trail.splice(0, trail.length - TRAIL_LIMIT);
}
