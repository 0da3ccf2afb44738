// WebSocket client with a latest-snapshot mailbox and auto-reconnect.
//
// Rendering reads only the newest snapshot (message handling and drawing
// are decoupled); events are forwarded in order.  While disconnected,
// nothing is queued: pilot input is only meaningful live.

import { parseServerMessage, ServerEvent, Snapshot, Welcome } from "./protocol.js";

export interface NetCallbacks {
  onWelcome?: (w: Welcome) => void;
  onEvent?: (e: ServerEvent) => void;
  onStatusChange?: (connected: boolean) => void;
}

export class CockpitSocket {
  latestSnapshot: Snapshot | null = null;
  welcome: Welcome | null = null;
  connected = false;
  reconnectDelayMs = 500;
  private ws: WebSocket | null = null;
  private closedByUser = false;

  constructor(private url: string, private callbacks: NetCallbacks = {}) {}

  connect(): void {
    this.closedByUser = false;
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.connected = true;
      this.callbacks.onStatusChange?.(true);
    };
    ws.onmessage = (ev) => {
      const msg = parseServerMessage(String(ev.data));
      if (!msg) return;
      if (msg.type === "snapshot") {
        this.latestSnapshot = msg;
      } else if (msg.type === "welcome") {
        this.welcome = msg;
        this.callbacks.onWelcome?.(msg);
      } else {
        this.callbacks.onEvent?.(msg);
      }
    };
    ws.onclose = () => {
      this.connected = false;
      this.callbacks.onStatusChange?.(false);
      this.ws = null;
      if (!this.closedByUser) {
        setTimeout(() => this.connect(), this.reconnectDelayMs);
      }
    };
    ws.onerror = () => {
      ws.close();
    };
  }

  /** Send a frame if connected; drops silently otherwise. */
  send(text: string): boolean {
    if (this.ws && this.connected && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(text);
      return true;
    }
    return false;
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}

export function serviceUrl(params: URLSearchParams, loc: Location): string {
  const host = params.get("host") ?? loc.hostname ?? "127.0.0.1";
  const port = params.get("port") ?? loc.port ?? "8765";
  const proto = loc.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${host}:${port}/ws`;
}
