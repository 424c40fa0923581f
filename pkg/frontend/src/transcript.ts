import type { DialogPayload, DisfluencySpan, RatingItem, TurnPayload } from "./types";

const SPEAKER_LABELS: Record<string, string> = {
  driver: "Driver",
  car_ai: "Car AI",
};

const SPAN_KINDS = [
  "repetition",
  "false_start",
  "filler",
  "pause",
  "correction",
  "replacement",
  "restart",
];

function highlightText(text: string, spans: DisfluencySpan[]): DocumentFragment {
  const fragment = document.createDocumentFragment();
  const sorted = [...spans].sort((x, y) => x.start - y.start);
  let cursor = 0;
  for (const span of sorted) {
    if (span.start < cursor || span.end > text.length) continue;
    if (span.start > cursor) {
      fragment.appendChild(document.createTextNode(text.slice(cursor, span.start)));
    }
    const mark = document.createElement("mark");
    mark.className = `disfluency disfluency-${span.kind}`;
    mark.title = span.kind.replace("_", " ");
    mark.textContent = text.slice(span.start, span.end);
    fragment.appendChild(mark);
    cursor = span.end;
  }
  if (cursor < text.length) {
    fragment.appendChild(document.createTextNode(text.slice(cursor)));
  }
  return fragment;
}

function turnBubble(turn: TurnPayload): HTMLElement {
  const bubble = document.createElement("div");
  bubble.className = `turn turn-${turn.speaker}`;
  const label = document.createElement("span");
  label.className = "speaker";
  label.textContent = SPEAKER_LABELS[turn.speaker] ?? turn.speaker;
  const text = document.createElement("p");
  text.className = "utterance";
  text.appendChild(highlightText(turn.text, turn.disfluency_spans ?? []));
  bubble.append(label, text);
  return bubble;
}

export function renderDialog(dialog: DialogPayload): HTMLElement {
  const container = document.createElement("div");
  container.className = "transcript";
  for (const turn of dialog.turns) {
    container.appendChild(turnBubble(turn));
  }
  return container;
}

function spanLegend(dialog: DialogPayload): HTMLElement | null {
  const present = new Set<string>();
  for (const turn of dialog.turns) {
    for (const span of turn.disfluency_spans ?? []) present.add(span.kind);
  }
  if (present.size === 0) return null;
  const legend = document.createElement("div");
  legend.className = "legend";
  for (const kind of SPAN_KINDS) {
    if (!present.has(kind)) continue;
    const entry = document.createElement("mark");
    entry.className = `disfluency disfluency-${kind}`;
    entry.textContent = kind.replace("_", " ");
    legend.appendChild(entry);
  }
  return legend;
}

/**
 * One transcript view for rating modes, or side-by-side panes labeled only
 * "A" and "B" for pairwise items. Pairwise payloads arrive blinded from the
 * server (turns only); nothing else is rendered for them.
 */
export function renderItem(item: RatingItem): HTMLElement {
  const root = document.createElement("div");
  root.className = "item-view";
  if (item.a && item.b) {
    const panes = document.createElement("div");
    panes.className = "pair-panes";
    for (const [label, dialog] of [
      ["A", item.a],
      ["B", item.b],
    ] as const) {
      const pane = document.createElement("section");
      pane.className = "pane";
      const heading = document.createElement("h3");
      heading.textContent = label;
      pane.append(heading, renderDialog(dialog));
      panes.appendChild(pane);
    }
    root.appendChild(panes);
    return root;
  }
  if (item.dialog) {
    const legend = spanLegend(item.dialog);
    if (legend) root.appendChild(legend);
    root.appendChild(renderDialog(item.dialog));
  }
  return root;
}
