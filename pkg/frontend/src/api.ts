// Thin client for the session API; no state here beyond the EventSource.

import type { SessionDescriptor, StreamEvent, ReflectionSummary } from "./types.js";

export type CreateSessionBody = {
  route: string;
  pois: string;
  theme: string;
  character: string;
  seed?: number;
  mode?: "simulated" | "external-positions";
  cruise_speed?: number;
  stops?: [number, number][];
  answers?: string | null;
};

export class ApiError extends Error {
  constructor(message: string, public status: number) {
    super(message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!response.ok) {
    let detail = response.statusText;
    try {
      detail = (await response.json()).detail ?? detail;
    } catch {
      // body was not JSON; keep the status text
    }
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

export function createSession(body: CreateSessionBody): Promise<SessionDescriptor> {
  return request("/sessions", { method: "POST", body: JSON.stringify(body) });
}

export function getSession(sessionId: string): Promise<SessionDescriptor> {
  return request(`/sessions/${sessionId}`);
}

export function getReflection(sessionId: string): Promise<ReflectionSummary> {
  return request(`/sessions/${sessionId}/reflection`);
}

export function postAnswer(sessionId: string, transcript: string): Promise<unknown> {
  return request(`/sessions/${sessionId}/answer`, {
    method: "POST",
    body: JSON.stringify({ transcript }),
  });
}

export function postQuestion(sessionId: string, transcript: string): Promise<unknown> {
  return request(`/sessions/${sessionId}/question`, {
    method: "POST",
    body: JSON.stringify({ transcript }),
  });
}

export function postHintRequest(sessionId: string): Promise<unknown> {
  return request(`/sessions/${sessionId}/hint`, { method: "POST", body: JSON.stringify({}) });
}

export type StreamHandle = { close: () => void };

// Streams events in order, resuming from lastSeq across reconnects. The
// browser's EventSource replays its Last-Event-ID header on reconnect, and
// the fold drops any duplicate seq, so no line is lost or doubled.
export function streamEvents(
  sessionId: string,
  lastSeq: number,
  onEvent: (event: StreamEvent) => void,
  onEnd: (error?: Error) => void,
): StreamHandle {
  const source = new EventSource(`/sessions/${sessionId}/events?last_seq=${lastSeq}`);
  let latest = lastSeq;
  const kinds: string[] = [
    "segment", "prompt", "hint_image", "answer_ack", "qa_answer", "state_change", "reflection",
  ];
  for (const kind of kinds) {
    source.addEventListener(kind, (raw) => {
      const event = JSON.parse((raw as MessageEvent).data) as StreamEvent;
      latest = Math.max(latest, event.seq);
      onEvent(event);
      if (event.kind === "reflection") {
        source.close();
        onEnd();
      }
    });
  }
  source.onerror = () => {
    // EventSource reconnects on transient errors by itself; a CLOSED state
    // after reflection already ended the stream.
    if (source.readyState === EventSource.CLOSED) {
      onEnd();
    }
  };
  return { close: () => source.close() };
}
