// HTML-string renderers for the three screens. Pure functions of their
// inputs so they snapshot-test without a browser; main.ts pours the strings
// into the DOM and wires the handlers by element id.

import {
  canAnswer,
  canAsk,
  canRequestHint,
  remainingSeconds,
  type UiSessionView,
} from "./fold.js";
import { CHARACTERS, THEMES, type SessionDescriptor } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const CHARACTER_LABELS: Record<string, string> = {
  pig: "Penny the Pig",
  dog: "Scout the Dog",
  rabbit: "Hazel the Rabbit",
  cat: "Milo the Cat",
};

export function renderSetupScreen(selectedTheme?: string, selectedCharacter?: string): string {
  const themeCards = THEMES.map(
    (theme) =>
      `<button class="card theme-card${theme === selectedTheme ? " selected" : ""}"` +
      ` data-theme="${theme}">${theme}</button>`,
  ).join("");
  const characterCards = CHARACTERS.map(
    (character) =>
      `<button class="card character-card${character === selectedCharacter ? " selected" : ""}"` +
      ` data-character="${character}">${CHARACTER_LABELS[character]}</button>`,
  ).join("");
  const ready = Boolean(selectedTheme && selectedCharacter);
  return `
  <section id="setup-screen">
    <h1>Plan today's journey</h1>
    <h2>Pick a theme</h2>
    <div class="card-row" id="theme-row">${themeCards}</div>
    <h2>Pick a travel buddy</h2>
    <div class="card-row" id="character-row">${characterCards}</div>
    <button id="start-journey" ${ready ? "" : "disabled"}>Start the journey</button>
    <p id="setup-error" class="error" hidden></p>
  </section>`;
}

type Projected = { x: number; y: number };

function projectPolyline(polyline: [number, number][], width: number, height: number): Projected[] {
  const lats = polyline.map(([lat]) => lat);
  const lons = polyline.map(([, lon]) => lon);
  const minLat = Math.min(...lats);
  const maxLat = Math.max(...lats);
  const minLon = Math.min(...lons);
  const maxLon = Math.max(...lons);
  const latSpan = Math.max(maxLat - minLat, 1e-9);
  const lonSpan = Math.max(maxLon - minLon, 1e-9);
  const pad = 14;
  return polyline.map(([lat, lon]) => ({
    x: pad + ((lon - minLon) / lonSpan) * (width - 2 * pad),
    y: height - pad - ((lat - minLat) / latSpan) * (height - 2 * pad),
  }));
}

function pointAtFraction(points: Projected[], fraction: number): Projected {
  if (points.length === 0) return { x: 0, y: 0 };
  const lengths: number[] = [0];
  for (let i = 1; i < points.length; i++) {
    const a = points[i - 1]!;
    const b = points[i]!;
    lengths.push(lengths[i - 1]! + Math.hypot(b.x - a.x, b.y - a.y));
  }
  const total = lengths[lengths.length - 1]!;
  const target = Math.min(1, Math.max(0, fraction)) * total;
  for (let i = 1; i < points.length; i++) {
    if (lengths[i]! >= target) {
      const a = points[i - 1]!;
      const b = points[i]!;
      const span = lengths[i]! - lengths[i - 1]!;
      const t = span === 0 ? 0 : (target - lengths[i - 1]!) / span;
      return { x: a.x + t * (b.x - a.x), y: a.y + t * (b.y - a.y) };
    }
  }
  return points[points.length - 1]!;
}

export function renderMap(view: UiSessionView, width = 360, height = 220): string {
  const descriptor = view.descriptor;
  const projected = projectPolyline(descriptor.route_polyline, width, height);
  const path = projected.map((p) => `${p.x.toFixed(1)},${p.y.toFixed(1)}`).join(" ");
  const markers = descriptor.pois
    .map((poi) => {
      const at = pointAtFraction(projected, poi.offset / descriptor.length_m);
      const reached = view.progressOffset !== null && view.progressOffset >= poi.offset;
      return (
        `<circle class="poi${reached ? " reached" : ""}" cx="${at.x.toFixed(1)}"` +
        ` cy="${at.y.toFixed(1)}" r="6"><title>${escapeHtml(poi.name)}</title></circle>`
      );
    })
    .join("");
  const fraction = (view.progressOffset ?? 0) / descriptor.length_m;
  const car = pointAtFraction(projected, fraction);
  return `
  <svg id="route-map" viewBox="0 0 ${width} ${height}" role="img" aria-label="route map">
    <polyline points="${path}" fill="none" stroke="#7aa" stroke-width="3"/>
    ${markers}
    <circle id="car-marker" cx="${car.x.toFixed(1)}" cy="${car.y.toFixed(1)}" r="7"/>
  </svg>`;
}

function renderTranscript(view: UiSessionView): string {
  const lines = view.transcript
    .map((line) => {
      const text = escapeHtml(line.text);
      if (line.kind === "hint") {
        return `<li class="line hint" data-seq="${line.seq}">(hint image shown)</li>`;
      }
      const speaker = line.speaker === "guide" ? "Guide" : line.speaker === "child" ? "You" : "";
      const label = speaker ? `<b>${speaker}:</b> ` : "";
      return `<li class="line ${line.kind}" data-seq="${line.seq}">${label}${text}</li>`;
    })
    .join("");
  return `<ol id="transcript">${lines}</ol>`;
}

function renderPromptPanel(view: UiSessionView): string {
  const prompt = view.activePrompt;
  const answering = canAnswer(view);
  if (!prompt) {
    return `
    <div id="prompt-panel" class="idle">
      <p>No question right now. Watch the window!</p>
      <input id="answer-input" disabled>
      <button id="answer-send" disabled>Answer</button>
      <button id="hint-button" disabled>I need a hint</button>
    </div>`;
  }
  const choices = (prompt.choices ?? [])
    .map(
      ([label, text]) =>
        `<button class="choice" data-choice="${label}" ${answering ? "" : "disabled"}>` +
        `(${label}) ${escapeHtml(text)}</button>`,
    )
    .join("");
  const hint = view.hintImage
    ? `<figure id="hint-panel"><img alt="hint illustration" src="/assets/${view.hintImage}">` +
      `<figcaption>A little hint!</figcaption></figure>`
    : "";
  return `
  <div id="prompt-panel">
    <p class="prompt-text">${escapeHtml(prompt.text)}</p>
    <div id="choice-row">${choices}</div>
    ${hint}
    <input id="answer-input" placeholder="Say your answer" ${answering ? "" : "disabled"}>
    <button id="answer-send" ${answering ? "" : "disabled"}>Answer</button>
    <button id="hint-button" ${canRequestHint(view) ? "" : "disabled"}>I need a hint</button>
  </div>`;
}

export function renderJourneyView(view: UiSessionView): string {
  const remaining = remainingSeconds(view);
  const minutes = Math.floor(remaining / 60);
  const seconds = String(remaining % 60).padStart(2, "0");
  const asking = canAsk(view);
  return `
  <section id="journey-view" data-phase="${view.phase}">
    <header>
      <span id="phase-banner">${view.phase.replace("_", " ")}</span>
      <span id="countdown">${minutes}:${seconds} left</span>
    </header>
    ${renderMap(view)}
    ${renderTranscript(view)}
    ${renderPromptPanel(view)}
    <div id="free-question">
      <input id="question-input" placeholder="Ask the guide anything" ${asking ? "" : "disabled"}>
      <button id="question-send" ${asking ? "" : "disabled"}>Ask</button>
      <button id="mic-button" title="voice input (live mode only)" disabled>&#127908;</button>
    </div>
  </section>`;
}

export function renderReflectionView(view: UiSessionView, enlarged?: string): string {
  const summary = view.reflection;
  if (!summary) return "";
  const counters = `
    <div class="counter" id="counter-creativity">
      <b>${summary.prompts_answered.creativity}</b> creativity</div>
    <div class="counter" id="counter-logical">
      <b>${summary.prompts_answered.logical_ability}</b> logical ability</div>
    <div class="counter" id="counter-decision">
      <b>${summary.prompts_answered.decision_making}</b> decision-making</div>`;
  const gallery = summary.gallery.length
    ? summary.gallery
        .map(
          ([poiId, ref]) =>
            `<img class="gallery-card${ref === enlarged ? " enlarged" : ""}"` +
            ` data-ref="${ref}" alt="memory of ${escapeHtml(poiId)}" src="/assets/${ref}">`,
        )
        .join("")
    : `<p id="gallery-empty">No pictures this time; next ride will make some!</p>`;
  return `
  <section id="reflection-view">
    <h1>The end of the journey</h1>
    <p>You explored <b>${summary.locations_interacted}</b> places.</p>
    <div id="goal-counters">${counters}</div>
    <h2>Journey gallery</h2>
    <div id="gallery">${gallery}</div>
  </section>`;
}

export function renderApp(view: UiSessionView | null, setupHtml: string): string {
  if (view === null) return setupHtml;
  if (view.reflection) return renderReflectionView(view);
  return renderJourneyView(view);
}

export function renderDescriptorSummary(descriptor: SessionDescriptor): string {
  return (
    `<p id="session-summary">session ${descriptor.session_id}: ${descriptor.theme} / ` +
    `${CHARACTER_LABELS[descriptor.character] ?? descriptor.character}, ` +
    `${(descriptor.length_m / 1000).toFixed(1)} km, ${descriptor.pois.length} stops</p>`
  );
}
