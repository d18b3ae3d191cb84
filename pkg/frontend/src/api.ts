// Thin fetch wrappers plus the resumable event-stream client.

import type { ApiError, StateEvent } from "./types.js";

export class ApiCallError extends Error {
  constructor(public status: number, public body: ApiError) {
    super(`${body.error}: ${body.detail}`);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new ApiCallError(response.status, body as ApiError);
  }
  return body as T;
}

export function getJson<T>(path: string): Promise<T> {
  return request<T>(path);
}

export function postJson<T>(path: string, payload: unknown): Promise<T> {
  return request<T>(path, { method: "POST", body: JSON.stringify(payload) });
}

export interface StreamHandlers {
  onEvent: (event: StateEvent) => void;
  onStatus: (connected: boolean) => void;
}

/**
 * EventSource wrapper that reconnects itself and always resumes from the
 * highest seq it has delivered, so a dropped stream produces neither
 * duplicate nor missing events downstream (the store also guards by seq).
 */
export class EventStream {
  private source: EventSource | null = null;
  private lastSeq = 0;
  private closed = false;

  constructor(private handlers: StreamHandlers) {}

  start(since: number): void {
    this.lastSeq = since;
    this.open();
  }

  private open(): void {
    if (this.closed) return;
    this.source = new EventSource(`/api/v1/events?since=${this.lastSeq}`);
    this.source.onopen = () => this.handlers.onStatus(true);
    this.source.onmessage = (message) => {
      const event = JSON.parse(message.data) as StateEvent;
      if (event.seq > this.lastSeq) {
        this.lastSeq = event.seq;
        this.handlers.onEvent(event);
      }
    };
    this.source.onerror = () => {
      this.handlers.onStatus(false);
      this.source?.close();
      this.source = null;
      setTimeout(() => this.open(), 1000);
    };
  }

  close(): void {
    this.closed = true;
    this.source?.close();
    this.source = null;
  }
}
