// Payload shapes spoken by the session API (see ../schemas/api.schema.json).

export type Theme = "nature" | "history" | "creativity" | "science";
export type CharacterName = "pig" | "dog" | "rabbit" | "cat";
export type Goal = "creativity" | "logical_ability" | "decision_making";

export const THEMES: Theme[] = ["nature", "history", "creativity", "science"];
export const CHARACTERS: CharacterName[] = ["pig", "dog", "rabbit", "cat"];

export type PoiMarker = {
  id: string;
  name: string;
  type: string;
  lat: number;
  lon: number;
  offset: number;
  trigger_offset: number;
};

export type SessionDescriptor = {
  session_id: string;
  route_ref: string;
  theme: Theme;
  character: CharacterName;
  seed: number;
  mode: "simulated" | "external-positions";
  state: string;
  created_at: string;
  eta_seconds: number;
  length_m: number;
  route_polyline: [number, number][]; // [lat, lon]
  pois: PoiMarker[];
};

export type SegmentPayload = {
  id: string;
  kind: "orientation" | "approach" | "introduction" | "narration" | "transition" | "reflection";
  text: string;
  poi_id: string | null;
  grounded_fact_ids?: string[];
  ungrounded?: boolean;
};

export type PromptPayload = {
  id: string;
  poi_id: string;
  strategy: string;
  goal: Goal;
  text: string;
  bloom: string;
  hint_image_spec: string;
  choices: [string, string][] | null;
  used_fallback: boolean;
};

export type ReflectionSummary = {
  locations_interacted: number;
  prompts_answered: Record<Goal, number>;
  prompts_unanswered: number;
  gallery: [string, string][]; // [poi_id, image_ref]
};

export type StreamEventKind =
  | "segment"
  | "prompt"
  | "hint_image"
  | "answer_ack"
  | "qa_answer"
  | "state_change"
  | "reflection";

export type StreamEvent = {
  seq: number;
  ts: number;
  kind: StreamEventKind;
  payload: {
    cause?: { type: string; ts: number; event_id: string };
    segment?: SegmentPayload;
    prompt?: PromptPayload;
    slot?: number;
    prompt_id?: string;
    image_ref?: string;
    transcript?: string;
    accepted_as?: "answer" | "help";
    question?: string;
    text?: string;
    from?: string;
    to?: string;
    progress?: { offset: number | null; speed: number | null };
    flags?: string[];
    summary?: ReflectionSummary;
  };
};
