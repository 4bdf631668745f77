/**
 * Wire types for the gateway protocol.
 *
 * One JSON object per WebSocket message (the raw TCP transport delimits the
 * same objects with newlines instead). Everything the UI displays arrives in
 * these frames; the client never computes poses or latency itself.
 */

export type Mode = "scripted" | "manual" | "shared";

export type Vec3 = [number, number, number];

export interface CmdVelFrame {
  type: "cmd_vel";
  drone_id?: string;
  vx: number;
  vy: number;
  vz: number;
}

export interface SetModeFrame {
  type: "set_mode";
  mode: Mode;
}

export interface SelectFrame {
  type: "select";
  drone_id: string;
}

export type ClientFrame = CmdVelFrame | SetModeFrame | SelectFrame;

export interface AckFrame {
  type: "ack";
  ok: boolean;
  detail: string;
}

export interface DroneTelemetry {
  id: string;
  chain_pose: Vec3;
  true_pose: Vec3;
}

export interface LatencyStats {
  median: number;
  p95: number;
}

export interface TelemetryFrame {
  type: "telemetry";
  t_ns: number;
  drones: DroneTelemetry[];
  latency_ms: LatencyStats;
  block: number;
}

export interface EventFrame {
  type: "event";
  name: string;
  key: string;
  block: number;
}

export type ServerFrame = AckFrame | TelemetryFrame | EventFrame;

export class ProtocolError extends Error {}

export function encodeClientFrame(frame: ClientFrame): string {
  return JSON.stringify(frame);
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function asVec3(v: unknown, where: string): Vec3 {
  if (!Array.isArray(v) || v.length !== 3 || !v.every(isFiniteNumber)) {
    throw new ProtocolError(`${where} must be [x, y, z] finite numbers`);
  }
  return [v[0], v[1], v[2]];
}

function asString(v: unknown, where: string): string {
  if (typeof v !== "string") throw new ProtocolError(`${where} must be a string`);
  return v;
}

/** Parse and validate one server frame; throws ProtocolError on anything
 *  malformed so transport bugs surface instead of rendering garbage. */
export function parseServerFrame(raw: string): ServerFrame {
  let obj: unknown;
  try {
    obj = JSON.parse(raw);
  } catch {
    throw new ProtocolError(`not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new ProtocolError("frame must be a JSON object");
  }
  const f = obj as Record<string, unknown>;
  switch (f.type) {
    case "ack": {
      if (typeof f.ok !== "boolean") throw new ProtocolError("ack.ok must be boolean");
      return { type: "ack", ok: f.ok, detail: asString(f.detail ?? "", "ack.detail") };
    }
    case "telemetry": {
      if (!isFiniteNumber(f.t_ns)) throw new ProtocolError("telemetry.t_ns must be a number");
      if (!isFiniteNumber(f.block)) throw new ProtocolError("telemetry.block must be a number");
      if (!Array.isArray(f.drones)) throw new ProtocolError("telemetry.drones must be a list");
      const drones = f.drones.map((d, i) => {
        const rec = d as Record<string, unknown>;
        return {
          id: asString(rec.id, `drones[${i}].id`),
          chain_pose: asVec3(rec.chain_pose, `drones[${i}].chain_pose`),
          true_pose: asVec3(rec.true_pose, `drones[${i}].true_pose`),
        };
      });
      const lat = f.latency_ms as Record<string, unknown>;
      if (typeof lat !== "object" || lat === null
          || !isFiniteNumber(lat.median) || !isFiniteNumber(lat.p95)) {
        throw new ProtocolError("telemetry.latency_ms must carry median and p95");
      }
      return {
        type: "telemetry",
        t_ns: f.t_ns,
        drones,
        latency_ms: { median: lat.median, p95: lat.p95 },
        block: f.block,
      };
    }
    case "event": {
      if (!isFiniteNumber(f.block)) throw new ProtocolError("event.block must be a number");
      return {
        type: "event",
        name: asString(f.name, "event.name"),
        key: asString(f.key, "event.key"),
        block: f.block,
      };
    }
    default:
      throw new ProtocolError(`unknown frame type ${JSON.stringify(f.type)}`);
  }
}
