/** Session client: connects, starts an episode, forwards one control
 * command per received state (tick-driven, so keydown-to-command latency is
 * bounded by one tick), and hands parsed messages to the UI callbacks.
 * No client-side physics: rendering consumes server poses only. */

import {
  EndMsg,
  ErrorMsg,
  parseServerMessage,
  SceneMsg,
  StateMsg,
  controlMessage,
  startMessage,
} from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface SessionCallbacks {
  onOpen?(): void;
  onScene?(msg: SceneMsg): void;
  onState?(msg: StateMsg): void;
  onEnd?(msg: EndMsg): void;
  onServerError?(msg: ErrorMsg): void;
  onClose?(): void;
  onConnectionError?(): void;
  onMalformed?(raw: string): void;
}

export class CockpitSession {
  private commandSource: () => number = () => 0;
  private lastTickSent = -1;
  private skipped = 0;
  ended = false;

  constructor(
    private socket: SocketLike,
    private callbacks: SessionCallbacks,
    private startOverrides: Record<string, number> = {},
  ) {
    socket.onopen = () => {
      this.socket.send(startMessage(this.startOverrides));
      callbacks.onOpen?.();
    };
    socket.onmessage = (ev) => this.handleFrame(String(ev.data));
    socket.onclose = () => callbacks.onClose?.();
    socket.onerror = () => callbacks.onConnectionError?.();
  }

  /** The session polls this for the accel command each tick. */
  setCommandSource(source: () => number): void {
    this.commandSource = source;
  }

  get skippedFrames(): number {
    return this.skipped;
  }

  handleFrame(raw: string): void {
    const msg = parseServerMessage(raw);
    if (msg === null) {
      this.skipped += 1;
      this.callbacks.onMalformed?.(raw);
      return;
    }
    switch (msg.type) {
      case "scene":
        this.callbacks.onScene?.(msg);
        break;
      case "state":
        // One command per tick, sent synchronously on the tick's state.
        if (!this.ended && msg.tick !== this.lastTickSent) {
          this.lastTickSent = msg.tick;
          this.socket.send(controlMessage(this.commandSource()));
        }
        this.callbacks.onState?.(msg);
        break;
      case "end":
        this.ended = true;
        this.callbacks.onEnd?.(msg);
        break;
      case "error":
        this.callbacks.onServerError?.(msg);
        break;
    }
  }

  close(): void {
    this.socket.close();
  }
}

export function connectCockpit(
  url: string,
  callbacks: SessionCallbacks,
  startOverrides: Record<string, number> = {},
): CockpitSession {
  return new CockpitSession(new WebSocket(url) as unknown as SocketLike, callbacks, startOverrides);
}
