/**
 * Top-down arena renderer. North-up map: world +x points up the screen,
 * +y points left, so pressing W moves the selected drone up. Altitude is
 * encoded in marker size. The chain-delivered pose draws solid, the
 * ground-truth pose as a ghost ring: the gap between them is the transport
 * lag made visible.
 */

import type { Vec3 } from "./protocol.js";
import type { ClientView, DroneView } from "./view.js";

export interface Camera {
  arena: [number, number];        // world extent in meters, centered on 0
  width: number;                  // canvas pixels
  height: number;
  margin: number;
}

export function makeCamera(width: number, height: number,
                           arena: [number, number] = [6, 6],
                           margin = 24): Camera {
  return { arena, width, height, margin };
}

export function scaleOf(cam: Camera): number {
  const usableW = cam.width - 2 * cam.margin;
  const usableH = cam.height - 2 * cam.margin;
  // +y spans the horizontal axis, +x the vertical one
  return Math.min(usableW / cam.arena[1], usableH / cam.arena[0]);
}

export function worldToScreen(p: Vec3, cam: Camera): [number, number] {
  const s = scaleOf(cam);
  return [cam.width / 2 - p[1] * s, cam.height / 2 - p[0] * s];
}

/** Marker size grows with altitude: 1 m of height is worth 3 px. */
export function markerRadius(z: number): number {
  return Math.min(16, Math.max(3, 5 + 3 * z));
}

export function legendPages(ids: string[], perPage = 8): string[][] {
  const pages: string[][] = [];
  for (let i = 0; i < ids.length; i += perPage) {
    pages.push(ids.slice(i, i + perPage));
  }
  return pages.length > 0 ? pages : [[]];
}

const PALETTE = ["#3aa3ff", "#ff9f40", "#6fd66f", "#e36de3",
                 "#ffd65c", "#66d9d9", "#ff7a7a", "#b3a1ff"];

export function droneColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

function tracePath(ctx: CanvasRenderingContext2D, pts: Vec3[], cam: Camera): void {
  ctx.beginPath();
  pts.forEach((p, i) => {
    const [x, y] = worldToScreen(p, cam);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
}

function drawDrone(ctx: CanvasRenderingContext2D, dv: DroneView, color: string,
                   selected: boolean, cam: Camera): void {
  ctx.save();
  ctx.lineWidth = 1;
  ctx.globalAlpha = 0.35;
  ctx.strokeStyle = color;
  tracePath(ctx, dv.trueTrail, cam);
  ctx.globalAlpha = 0.8;
  tracePath(ctx, dv.chainTrail, cam);

  // ground truth as ghost ring
  ctx.globalAlpha = 0.5;
  const [tx, ty] = worldToScreen(dv.truePose, cam);
  ctx.beginPath();
  ctx.arc(tx, ty, markerRadius(dv.truePose[2]), 0, 2 * Math.PI);
  ctx.stroke();

  // chain pose solid: what the remote side believes
  ctx.globalAlpha = 1;
  ctx.fillStyle = color;
  const [cx, cy] = worldToScreen(dv.chainPose, cam);
  ctx.beginPath();
  ctx.arc(cx, cy, markerRadius(dv.chainPose[2]), 0, 2 * Math.PI);
  ctx.fill();

  if (selected) {
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.arc(cx, cy, markerRadius(dv.chainPose[2]) + 4, 0, 2 * Math.PI);
    ctx.stroke();
  }
  ctx.restore();
}

export function drawScene(ctx: CanvasRenderingContext2D, view: ClientView,
                          cam: Camera, legendPage = 0): void {
  ctx.clearRect(0, 0, cam.width, cam.height);
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, cam.width, cam.height);

  // arena bounds and a 1 m grid
  const s = scaleOf(cam);
  const [hx, hy] = [cam.arena[0] / 2, cam.arena[1] / 2];
  const [left, top] = worldToScreen([hx, hy, 0], cam);
  ctx.strokeStyle = "#2a3342";
  ctx.lineWidth = 1;
  for (let gx = -Math.floor(hx); gx <= hx; gx++) {
    const [, y] = worldToScreen([gx, 0, 0], cam);
    ctx.beginPath();
    ctx.moveTo(left, y);
    ctx.lineTo(left + cam.arena[1] * s, y);
    ctx.stroke();
  }
  for (let gy = -Math.floor(hy); gy <= hy; gy++) {
    const [x] = worldToScreen([0, gy, 0], cam);
    ctx.beginPath();
    ctx.moveTo(x, top);
    ctx.lineTo(x, top + cam.arena[0] * s);
    ctx.stroke();
  }
  ctx.strokeStyle = "#55657e";
  ctx.lineWidth = 2;
  ctx.strokeRect(left, top, cam.arena[1] * s, cam.arena[0] * s);

  const ids = view.droneIds();
  ids.forEach((id, i) => {
    const dv = view.drones.get(id);
    if (dv) drawDrone(ctx, dv, droneColor(i), id === view.selected, cam);
  });

  // HUD: latency verbatim from telemetry, block height, mode, input
  ctx.fillStyle = "#d7dee8";
  ctx.font = "13px system-ui, sans-serif";
  const lat = view.latency;
  const latText = lat === null ? "latency: waiting for samples"
    : `latency: median ${lat.median.toFixed(0)} ms, p95 ${lat.p95.toFixed(0)} ms`;
  ctx.fillText(latText, 10, 18);
  ctx.fillText(`block ${view.block}  mode ${view.mode}`, 10, 36);
  const [ix, iy, iz] = view.inputVector;
  if (ix !== 0 || iy !== 0 || iz !== 0) {
    ctx.fillText(`input (${ix.toFixed(2)}, ${iy.toFixed(2)}, ${iz.toFixed(2)})`, 10, 54);
  }

  // legend, paginated when the fleet outgrows one column
  const pages = legendPages(ids);
  const page = pages[Math.min(legendPage, pages.length - 1)];
  page.forEach((id, i) => {
    const color = droneColor(ids.indexOf(id));
    ctx.fillStyle = color;
    ctx.fillRect(cam.width - 120, 12 + i * 18, 10, 10);
    ctx.fillStyle = "#d7dee8";
    ctx.fillText(id, cam.width - 104, 21 + i * 18);
  });
  if (pages.length > 1) {
    ctx.fillText(`page ${Math.min(legendPage, pages.length - 1) + 1}/${pages.length}`,
                 cam.width - 120, 12 + page.length * 18 + 14);
  }

  // block ticker: newest last, bottom-left
  ctx.fillStyle = "#8fa1b8";
  ctx.font = "11px ui-monospace, monospace";
  const feed = view.blockFeed.slice(-8);
  feed.forEach((ev, i) => {
    ctx.fillText(`#${ev.block} ${ev.name} ${ev.key}`,
                 10, cam.height - 12 - (feed.length - 1 - i) * 14);
  });

  if (view.connection !== "connected") {
    ctx.fillStyle = "rgba(16, 20, 26, 0.82)";
    ctx.fillRect(0, cam.height / 2 - 28, cam.width, 56);
    ctx.fillStyle = "#ffb347";
    ctx.font = "16px system-ui, sans-serif";
    ctx.textAlign = "center";
    const text = view.connection === "connecting"
      ? "connecting to gateway..."
      : "disconnected: retrying";
    ctx.fillText(text, cam.width / 2, cam.height / 2 + 5);
    ctx.textAlign = "left";
  }
}
