// DOM shell: owns nothing but the current descriptor + folded view and pours
// renderer output into #app. All state changes arrive as server events.

import {
  createSession,
  postAnswer,
  postHintRequest,
  postQuestion,
  streamEvents,
  type StreamHandle,
} from "./api.js";
import { applyEvent, emptyView, type UiSessionView } from "./fold.js";
import { renderApp, renderSetupScreen } from "./render.js";
import type { SessionDescriptor, StreamEvent } from "./types.js";

const ROUTE_REF = "route.geojson";
const POIS_REF = "pois.geojson";

let selectedTheme: string | undefined;
let selectedCharacter: string | undefined;
let view: UiSessionView | null = null;
let stream: StreamHandle | null = null;

const app = document.getElementById("app")!;

function paint(): void {
  app.innerHTML = renderApp(view, renderSetupScreen(selectedTheme, selectedCharacter));
  wireHandlers();
}

function onEvent(event: StreamEvent): void {
  if (view === null) return;
  view = applyEvent(view, event);
  paint();
}

function startStream(descriptor: SessionDescriptor): void {
  view = emptyView(descriptor);
  stream?.close();
  stream = streamEvents(descriptor.session_id, -1, onEvent, (error) => {
    if (error) showError(error.message);
  });
  paint();
}

function showError(message: string): void {
  const banner = document.getElementById("setup-error");
  if (banner) {
    banner.textContent = message;
    banner.removeAttribute("hidden");
  }
}

function wireHandlers(): void {
  document.querySelectorAll<HTMLButtonElement>(".theme-card").forEach((button) => {
    button.onclick = () => {
      selectedTheme = button.dataset.theme;
      paint();
    };
  });
  document.querySelectorAll<HTMLButtonElement>(".character-card").forEach((button) => {
    button.onclick = () => {
      selectedCharacter = button.dataset.character;
      paint();
    };
  });
  const start = document.getElementById("start-journey") as HTMLButtonElement | null;
  if (start) {
    start.onclick = async () => {
      if (!selectedTheme || !selectedCharacter) return;
      start.disabled = true;
      try {
        const descriptor = await createSession({
          route: ROUTE_REF,
          pois: POIS_REF,
          theme: selectedTheme,
          character: selectedCharacter,
          seed: Math.floor(Math.random() * 1_000_000),
        });
        startStream(descriptor);
      } catch (error) {
        start.disabled = false;
        showError(error instanceof Error ? error.message : String(error));
      }
    };
  }

  const sessionId = view?.descriptor.session_id;
  if (!sessionId) return;

  const answerInput = document.getElementById("answer-input") as HTMLInputElement | null;
  const answerSend = document.getElementById("answer-send") as HTMLButtonElement | null;
  if (answerInput && answerSend && !answerSend.disabled) {
    answerSend.onclick = () => {
      const text = answerInput.value.trim();
      if (text) void postAnswer(sessionId, text);
      answerInput.value = "";
    };
  }
  document.querySelectorAll<HTMLButtonElement>(".choice").forEach((button) => {
    if (!button.disabled) {
      button.onclick = () => void postAnswer(sessionId, button.textContent ?? "");
    }
  });
  const hint = document.getElementById("hint-button") as HTMLButtonElement | null;
  if (hint && !hint.disabled) {
    hint.onclick = () => void postHintRequest(sessionId);
  }
  const questionInput = document.getElementById("question-input") as HTMLInputElement | null;
  const questionSend = document.getElementById("question-send") as HTMLButtonElement | null;
  if (questionInput && questionSend && !questionSend.disabled) {
    questionSend.onclick = () => {
      const text = questionInput.value.trim();
      if (text) void postQuestion(sessionId, text);
      questionInput.value = "";
    };
  }
  document.querySelectorAll<HTMLImageElement>(".gallery-card").forEach((img) => {
    img.onclick = () => img.classList.toggle("enlarged");
  });
}

paint();
