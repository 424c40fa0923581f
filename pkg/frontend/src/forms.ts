import type { FormSpec, RatingRecord } from "./types";

export type FormState = Map<string, number | "A" | "B">;

/**
 * Client-side mirror of the server's rating validation: only metrics from
 * the served form spec, Likert strictly integer 1..5, pairwise strictly
 * A/B. The radio construction already guarantees this; the guard makes the
 * invariant unconditional even for programmatic submissions.
 */
export function buildRecords(
  spec: FormSpec,
  state: FormState,
  evaluatorId: string,
  itemId: string,
): RatingRecord[] {
  const records: RatingRecord[] = [];
  const registered = new Set(spec.metrics.map((m) => m.name));
  for (const [metric, value] of state) {
    if (!registered.has(metric)) {
      throw new Error(`metric ${metric} is not in the served form spec`);
    }
    const kind = spec.metrics.find((m) => m.name === metric)!.kind;
    if (kind === "likert") {
      if (typeof value !== "number" || !Number.isInteger(value) || value < 1 || value > 5) {
        throw new Error(`Likert value for ${metric} must be an integer in [1, 5]`);
      }
      records.push({ evaluator_id: evaluatorId, item_id: itemId, metric_name: metric, value });
    } else {
      if (value !== "A" && value !== "B") {
        throw new Error(`choice for ${metric} must be A or B`);
      }
      records.push({ evaluator_id: evaluatorId, item_id: itemId, metric_name: metric, choice: value });
    }
  }
  return records;
}

export function isComplete(spec: FormSpec, state: FormState, alreadyRated: string[]): boolean {
  const done = new Set(alreadyRated);
  return spec.metrics.every((m) => done.has(m.name) || state.has(m.name));
}

export type FormHandles = {
  element: HTMLFormElement;
  state: FormState;
  submitButton: HTMLButtonElement;
  errorBox: HTMLElement;
  refresh: () => void;
};

function likertRow(name: string, anchors: Record<string, string>, onChange: (v: number) => void): HTMLElement {
  const row = document.createElement("fieldset");
  row.className = "metric-row";
  row.dataset.metric = name;
  const legend = document.createElement("legend");
  legend.textContent = name.replace(/_/g, " ");
  row.appendChild(legend);
  const low = document.createElement("span");
  low.className = "anchor anchor-low";
  low.textContent = `1 = ${anchors["1"] ?? ""}`;
  const high = document.createElement("span");
  high.className = "anchor anchor-high";
  high.textContent = `5 = ${anchors["5"] ?? ""}`;
  const scale = document.createElement("div");
  scale.className = "scale";
  for (let value = 1; value <= 5; value++) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = name;
    input.value = String(value);
    input.addEventListener("change", () => onChange(value));
    label.append(input, document.createTextNode(String(value)));
    scale.appendChild(label);
  }
  row.append(low, scale, high);
  return row;
}

function choiceRow(name: string, prompt: string, onChange: (v: "A" | "B") => void): HTMLElement {
  const row = document.createElement("fieldset");
  row.className = "metric-row";
  row.dataset.metric = name;
  const legend = document.createElement("legend");
  legend.textContent = prompt;
  row.appendChild(legend);
  const scale = document.createElement("div");
  scale.className = "scale";
  for (const side of ["A", "B"] as const) {
    const label = document.createElement("label");
    const input = document.createElement("input");
    input.type = "radio";
    input.name = name;
    input.value = side;
    input.addEventListener("change", () => onChange(side));
    label.append(input, document.createTextNode(side));
    scale.appendChild(label);
  }
  row.appendChild(scale);
  return row;
}

/**
 * Build the metric form for one item. The submit button stays disabled
 * until every metric not already rated has a selection.
 */
export function renderForm(
  spec: FormSpec,
  alreadyRated: string[],
  onSubmit: (state: FormState) => void,
): FormHandles {
  const form = document.createElement("form");
  form.className = "rating-form";
  const state: FormState = new Map();
  const errorBox = document.createElement("p");
  errorBox.className = "form-error";
  errorBox.hidden = true;
  const submitButton = document.createElement("button");
  submitButton.type = "submit";
  submitButton.textContent = "Submit & next";
  submitButton.disabled = true;

  const refresh = () => {
    submitButton.disabled = !isComplete(spec, state, alreadyRated);
  };

  const rated = new Set(alreadyRated);
  for (const metric of spec.metrics) {
    if (rated.has(metric.name)) continue;
    const row =
      metric.kind === "likert"
        ? likertRow(metric.name, metric.anchors, (value) => {
            state.set(metric.name, value);
            refresh();
          })
        : choiceRow(metric.name, metric.prompt, (side) => {
            state.set(metric.name, side);
            refresh();
          });
    form.appendChild(row);
  }
  form.append(errorBox, submitButton);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (submitButton.disabled) return;
    onSubmit(state);
  });
  return { element: form, state, submitButton, errorBox, refresh };
}

export function showFormError(handles: FormHandles, message: string): void {
  handles.errorBox.textContent = message;
  handles.errorBox.hidden = false;
}
