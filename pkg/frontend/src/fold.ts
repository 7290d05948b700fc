// The journey view is a pure fold over the server's event stream: no UI
// action mutates it directly, and replaying the same events always rebuilds
// the identical view, which is what makes resume-after-reconnect safe.

import type {
  Goal,
  PromptPayload,
  ReflectionSummary,
  SessionDescriptor,
  StreamEvent,
} from "./types.js";

export type TranscriptLine = {
  seq: number;
  ts: number;
  kind:
    | "segment"
    | "prompt"
    | "answer"
    | "help"
    | "question"
    | "qa-answer"
    | "hint"
    | "notice";
  speaker: "guide" | "child" | "system";
  text: string;
  segmentKind?: string;
  promptId?: string;
};

export type UiSessionView = {
  descriptor: SessionDescriptor;
  lastSeq: number;
  phase: string;
  progressOffset: number | null;
  lastEventTs: number;
  transcript: TranscriptLine[];
  activePrompt: PromptPayload | null;
  hintImage: string | null; // ref shown for the active prompt
  tallies: Record<Goal, number>;
  answeredTotal: number;
  promptCount: number;
  reflection: ReflectionSummary | null;
  promptGoals: Record<string, Goal>;
};

export function emptyView(descriptor: SessionDescriptor): UiSessionView {
  return {
    descriptor,
    lastSeq: -1,
    phase: descriptor.state,
    progressOffset: null,
    lastEventTs: 0,
    transcript: [],
    activePrompt: null,
    hintImage: null,
    tallies: { creativity: 0, logical_ability: 0, decision_making: 0 },
    answeredTotal: 0,
    promptCount: 0,
    reflection: null,
    promptGoals: {},
  };
}

function phaseOf(stateString: string): string {
  const paren = stateString.indexOf("(");
  return paren === -1 ? stateString : stateString.slice(0, paren);
}

export function applyEvent(view: UiSessionView, event: StreamEvent): UiSessionView {
  if (event.seq <= view.lastSeq) {
    return view; // duplicate delivery (e.g. overlap on reconnect)
  }
  const next: UiSessionView = {
    ...view,
    tallies: { ...view.tallies },
    transcript: view.transcript,
    promptGoals: view.promptGoals,
    lastSeq: event.seq,
    lastEventTs: event.ts,
  };
  const line = (partial: Omit<TranscriptLine, "seq" | "ts">): void => {
    next.transcript = [...next.transcript, { seq: event.seq, ts: event.ts, ...partial }];
  };

  const payload = event.payload;
  switch (event.kind) {
    case "state_change": {
      if (payload.to !== undefined) {
        next.phase = phaseOf(payload.to);
      }
      const offset = payload.progress?.offset;
      if (offset !== null && offset !== undefined) {
        next.progressOffset = offset;
      }
      if (payload.flags && payload.flags.includes("truncated")) {
        line({ kind: "notice", speaker: "system", text: "Short on time, skipping ahead!" });
      }
      if (next.phase !== "conversing") {
        next.activePrompt = null;
        next.hintImage = null;
      }
      break;
    }
    case "segment": {
      const segment = payload.segment;
      if (segment) {
        line({
          kind: "segment",
          speaker: "guide",
          text: segment.text,
          segmentKind: segment.kind,
        });
      }
      break;
    }
    case "prompt": {
      const prompt = payload.prompt;
      if (prompt) {
        next.activePrompt = prompt;
        next.hintImage = null;
        next.promptCount += 1;
        next.promptGoals = { ...next.promptGoals, [prompt.id]: prompt.goal };
        line({ kind: "prompt", speaker: "guide", text: prompt.text, promptId: prompt.id });
      }
      break;
    }
    case "answer_ack": {
      const accepted = payload.accepted_as;
      const transcript = payload.transcript ?? "";
      if (accepted === "answer") {
        const goal = payload.prompt_id ? next.promptGoals[payload.prompt_id] : undefined;
        if (goal) {
          next.tallies[goal] += 1;
          next.answeredTotal += 1;
        }
        if (next.activePrompt && next.activePrompt.id === payload.prompt_id) {
          next.activePrompt = null;
          next.hintImage = null;
        }
        line({ kind: "answer", speaker: "child", text: transcript, promptId: payload.prompt_id });
      } else {
        line({ kind: "help", speaker: "child", text: transcript, promptId: payload.prompt_id });
      }
      break;
    }
    case "hint_image": {
      if (payload.image_ref) {
        next.hintImage = payload.image_ref;
        line({ kind: "hint", speaker: "system", text: payload.image_ref });
      }
      break;
    }
    case "qa_answer": {
      line({ kind: "question", speaker: "child", text: payload.question ?? "" });
      line({ kind: "qa-answer", speaker: "guide", text: payload.text ?? "" });
      break;
    }
    case "reflection": {
      if (payload.summary) {
        next.reflection = payload.summary;
      }
      next.activePrompt = null;
      next.hintImage = null;
      break;
    }
  }
  return next;
}

export function foldEvents(
  descriptor: SessionDescriptor,
  events: StreamEvent[],
  start?: UiSessionView,
): UiSessionView {
  let view = start ?? emptyView(descriptor);
  for (const event of events) {
    view = applyEvent(view, event);
  }
  return view;
}

export function remainingSeconds(view: UiSessionView): number {
  return Math.max(0, Math.round(view.descriptor.eta_seconds - view.lastEventTs));
}

// Whether UI inputs may fire right now; buttons outside these states must be
// disabled so no API call can be invalid for the session state.
export function canAnswer(view: UiSessionView): boolean {
  return view.phase === "conversing" && view.activePrompt !== null;
}

export function canAsk(view: UiSessionView): boolean {
  return view.phase === "conversing" || view.phase === "cruising";
}

export function canRequestHint(view: UiSessionView): boolean {
  return canAnswer(view);
}
