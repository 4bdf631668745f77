/**
 * Bootstrap: one view model, one socket, one animation loop. Socket
 * callbacks mutate the view; requestAnimationFrame redraws it; the command
 * streamer turns held keys into cmd_vel frames at 10 Hz.
 */

import { CommandStreamer, InputTracker } from "./input.js";
import { GatewayClient } from "./net.js";
import type { Mode } from "./protocol.js";
import { drawScene, makeCamera } from "./render.js";
import { ClientView } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("arena");
const ctx = canvas.getContext("2d");
if (ctx === null) throw new Error("canvas 2d context unavailable");

const view = new ClientView();
const tracker = new InputTracker();
let client: GatewayClient | null = null;
let legendPage = 0;

const streamer = new CommandStreamer(
  tracker,
  (frame) => {
    client?.send(frame);
    view.setInput([frame.vx, frame.vy, frame.vz]);
  },
  () => view.selected ?? undefined,
);

function connect(url: string): void {
  client?.close();
  client = new GatewayClient(url, {
    onFrame: (frame) => {
      view.applyFrame(frame);
      if (frame.type === "ack" && !frame.ok) {
        el<HTMLSpanElement>("status").textContent = frame.detail;
      }
      refreshDroneList();
    },
    onState: (state) => {
      view.setConnection(state);
      el<HTMLSpanElement>("status").textContent = state;
    },
  });
  client.connect();
}

function refreshDroneList(): void {
  const select = el<HTMLSelectElement>("drone");
  const ids = view.droneIds();
  if (select.options.length === ids.length) return;
  const keep = select.value;
  select.innerHTML = "";
  for (const id of ids) {
    const opt = document.createElement("option");
    opt.value = opt.textContent = id;
    select.appendChild(opt);
  }
  if (ids.includes(keep)) select.value = keep;
  view.select(select.value || null);
}

el<HTMLButtonElement>("connect").addEventListener("click", () => {
  connect(el<HTMLInputElement>("url").value);
});

el<HTMLSelectElement>("mode").addEventListener("change", (ev) => {
  const mode = (ev.target as HTMLSelectElement).value as Mode;
  client?.send({ type: "set_mode", mode });
});

el<HTMLSelectElement>("drone").addEventListener("change", (ev) => {
  const id = (ev.target as HTMLSelectElement).value;
  view.select(id);
  client?.send({ type: "select", drone_id: id });
});

el<HTMLButtonElement>("legend-next").addEventListener("click", () => {
  legendPage += 1;
});

window.addEventListener("keydown", (ev) => {
  if (ev.repeat || ev.target instanceof HTMLInputElement) return;
  tracker.press(ev.code);
});
window.addEventListener("keyup", (ev) => tracker.release(ev.code));
window.addEventListener("blur", () => tracker.clear());

streamer.start();

function frame(): void {
  const cam = makeCamera(canvas.width, canvas.height);
  if (!tracker.active()) view.setInput([0, 0, 0]);
  drawScene(ctx!, view, cam, legendPage);
  requestAnimationFrame(frame);
}
requestAnimationFrame(frame);

connect(el<HTMLInputElement>("url").value);
