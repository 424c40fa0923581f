// Payload shapes exactly as the annotation service emits them
// (see docs/annotation-api.md in the repository root).

export type SessionMode = "intrinsic" | "pairwise" | "disfluency_integration";

export type DisfluencySpan = {
  kind: string;
  start: number;
  end: number;
  source?: string;
};

export type TurnPayload = {
  speaker: "driver" | "car_ai";
  text: string;
  turn_index?: number;
  disfluency_spans?: DisfluencySpan[];
};

export type DialogPayload = {
  id?: string;
  turns: TurnPayload[];
};

export type MetricSpec =
  | { name: string; kind: "likert"; anchors: Record<string, string> }
  | { name: string; kind: "choice"; prompt: string };

export type FormSpec = {
  mode: SessionMode;
  metrics: MetricSpec[];
};

export type RatingItem = {
  item_id: string;
  dialog?: DialogPayload;
  a?: DialogPayload;
  b?: DialogPayload;
};

export type NextItemResponse =
  | { done: true }
  | {
      session_id: string;
      item: RatingItem;
      form: FormSpec;
      already_rated: string[];
    };

export type RatingRecord = {
  evaluator_id: string;
  item_id: string;
  metric_name: string;
  value?: number;
  choice?: "A" | "B";
};

export type LikertSummaryEntry = {
  mean: number;
  half_width: number;
  count: number;
  rendered: string;
};

export type SessionSummary = {
  session_id: string;
  mode: SessionMode;
  items: number;
  evaluators: string[];
  judgments: { completed: number; total: number };
  completion: number;
  likert?: Record<string, LikertSummaryEntry>;
  insufficient?: string[];
  pairwise?: Record<string, { A: number; B: number }>;
  pairwise_majority?: Record<string, { A: number; B: number; ties: number }>;
  pairwise_by_source?: Record<string, Record<string, number>>;
};
