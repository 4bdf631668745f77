/**
 * WebSocket transport with automatic reconnect. The gateway accepts a
 * WebSocket upgrade on the same port as its newline-JSON socket and then
 * carries one frame per message.
 */

import { encodeClientFrame, parseServerFrame } from "./protocol.js";
import type { ClientFrame, ServerFrame } from "./protocol.js";
import type { Connection } from "./view.js";

const BACKOFF_MS = [500, 1000, 2000, 4000];

export interface GatewayHandlers {
  onFrame: (frame: ServerFrame) => void;
  onState: (state: Connection) => void;
  onError?: (detail: string) => void;
}

export class GatewayClient {
  private ws: WebSocket | null = null;
  private attempts = 0;
  private closed = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private url: string, private handlers: GatewayHandlers) {}

  connect(): void {
    this.closed = false;
    this.handlers.onState("connecting");
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.attempts = 0;
      this.handlers.onState("connected");
    };
    this.ws.onmessage = (ev) => {
      try {
        this.handlers.onFrame(parseServerFrame(String(ev.data)));
      } catch (e) {
        this.handlers.onError?.(String(e));
      }
    };
    this.ws.onclose = () => {
      this.ws = null;
      if (this.closed) return;
      this.handlers.onState("disconnected");
      const wait = BACKOFF_MS[Math.min(this.attempts, BACKOFF_MS.length - 1)];
      this.attempts += 1;
      this.retryTimer = setTimeout(() => this.connect(), wait);
    };
    this.ws.onerror = () => {
      // onclose follows and owns the retry
    };
  }

  send(frame: ClientFrame): boolean {
    if (this.ws === null || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(encodeClientFrame(frame));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.retryTimer !== null) clearTimeout(this.retryTimer);
    this.ws?.close();
    this.ws = null;
  }
}
