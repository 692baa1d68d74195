// Live event subscription. The server ends a silent stream after an idle
// budget, so the client reconnects from its cursor; a "gap" record means
// the engine's ring buffer wrapped past us and a full refresh is needed.

import type { EngineEvent } from "./api.js";

export interface StreamHandle {
  close(): void;
}

// Matches the subset of EventSource the client needs; tests inject a fake.
export interface Transport {
  open(
    url: string,
    onMessage: (data: string) => void,
    onError: () => void,
  ): StreamHandle;
}

export const eventSourceTransport: Transport = {
  open(url, onMessage, onError) {
    const source = new EventSource(url);
    source.onmessage = (ev) => onMessage(ev.data);
    source.onerror = () => onError();
    return { close: () => source.close() };
  },
};

export interface SubscriberCallbacks {
  onEvent(event: EngineEvent): void;
  onGap(dropped: number): void;
  onStateChange(connected: boolean): void;
}

export class EventFeed {
  private cursor: number;
  private handle: StreamHandle | null = null;
  private closed = false;
  private retryMs = 500;

  constructor(
    private urlFor: (after: number) => string,
    private callbacks: SubscriberCallbacks,
    private transport: Transport = eventSourceTransport,
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) => {
      setTimeout(fn, ms);
    },
  ) {
    this.cursor = 0;
  }

  start(after = 0): void {
    this.cursor = after;
    this.connect();
  }

  private connect(): void {
    if (this.closed) return;
    this.handle = this.transport.open(
      this.urlFor(this.cursor),
      (data) => this.receive(data),
      () => this.dropped(),
    );
    this.callbacks.onStateChange(true);
  }

  private receive(data: string): void {
    let parsed: EngineEvent | { kind: "gap"; dropped: number };
    try {
      parsed = JSON.parse(data);
    } catch {
      return; // not ours; the timeout sentinel has its own event name
    }
    this.retryMs = 500;
    if (parsed.kind === "gap") {
      this.callbacks.onGap((parsed as { dropped: number }).dropped ?? 0);
      return;
    }
    const event = parsed as EngineEvent;
    if (typeof event.seq === "number") {
      this.cursor = Math.max(this.cursor, event.seq);
      this.callbacks.onEvent(event);
    }
  }

  private dropped(): void {
    if (this.closed) return;
    this.handle?.close();
    this.handle = null;
    this.callbacks.onStateChange(false);
    const wait = this.retryMs;
    this.retryMs = Math.min(this.retryMs * 2, 10_000);
    this.schedule(() => this.connect(), wait);
  }

  close(): void {
    this.closed = true;
    this.handle?.close();
    this.handle = null;
  }
}
