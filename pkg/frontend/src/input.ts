/**
 * Keyboard state to normalized velocity vectors.
 *
 * WASD steers in the plane (screen-up is +x, the world frame of the arena
 * view), R/F climbs and descends. The vector never exceeds unit magnitude;
 * the server scales to its own speed limit and clamps again regardless.
 */

import type { CmdVelFrame, Vec3 } from "./protocol.js";

export const KEY_VECTORS: Record<string, Vec3> = {
  KeyW: [1, 0, 0],
  KeyS: [-1, 0, 0],
  KeyA: [0, 1, 0],
  KeyD: [0, -1, 0],
  KeyR: [0, 0, 1],
  KeyF: [0, 0, -1],
};

export class InputTracker {
  private held = new Set<string>();

  press(code: string): void {
    if (code in KEY_VECTORS) this.held.add(code);
  }

  release(code: string): void {
    this.held.delete(code);
  }

  /** Drop everything held, e.g. when the window loses focus. */
  clear(): void {
    this.held.clear();
  }

  active(): boolean {
    return this.held.size > 0;
  }

  /** Sum of held key directions, scaled back to unit magnitude when keys
   *  combine (W+D gives (0.707, -0.707, 0), not a faster diagonal). */
  vector(): Vec3 {
    let x = 0, y = 0, z = 0;
    for (const code of this.held) {
      const [dx, dy, dz] = KEY_VECTORS[code];
      x += dx; y += dy; z += dz;
    }
    const mag = Math.hypot(x, y, z);
    if (mag > 1) {
      x /= mag; y /= mag; z /= mag;
    }
    return [x, y, z];
  }
}

export const COMMAND_PERIOD_MS = 100;

/**
 * Emits one cmd_vel frame per tick while input is active, and exactly one
 * zero command on the tick after it goes idle, then stays silent. The
 * periodic zero would otherwise fight the scripted controller in shared
 * mode by refreshing manual ownership forever.
 */
export class CommandStreamer {
  private wasActive = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private tracker: InputTracker,
    private send: (frame: CmdVelFrame) => void,
    private droneId: () => string | undefined,
  ) {}

  start(): void {
    if (this.timer === null) {
      this.timer = setInterval(() => this.tick(), COMMAND_PERIOD_MS);
    }
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.wasActive = false;
  }

  tick(): void {
    const activeNow = this.tracker.active();
    if (!activeNow && !this.wasActive) return;
    const [vx, vy, vz] = activeNow ? this.tracker.vector() : [0, 0, 0];
    const frame: CmdVelFrame = { type: "cmd_vel", vx, vy, vz };
    const id = this.droneId();
    if (id !== undefined) frame.drone_id = id;
    this.send(frame);
    this.wasActive = activeNow;
  }
}
