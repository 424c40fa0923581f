import type { SessionSummary } from "./types";

/** Completion bar plus per-metric running means (or pairwise counts). */
export function renderProgress(summary: SessionSummary): HTMLElement {
  const root = document.createElement("div");
  root.className = "progress-view";

  const fraction = summary.completion;
  const bar = document.createElement("div");
  bar.className = "progress-bar";
  const fill = document.createElement("div");
  fill.className = "progress-fill";
  fill.style.width = `${Math.round(fraction * 100)}%`;
  bar.appendChild(fill);
  const caption = document.createElement("span");
  caption.className = "progress-caption";
  caption.textContent =
    `${summary.judgments.completed}/${summary.judgments.total} judgments ` +
    `(${Math.round(fraction * 100)}%)`;
  root.append(bar, caption);

  const table = document.createElement("table");
  table.className = "running-means";
  if (summary.likert) {
    for (const [metric, entry] of Object.entries(summary.likert)) {
      const row = table.insertRow();
      row.insertCell().textContent = metric.replace(/_/g, " ");
      row.insertCell().textContent = entry.rendered;
    }
  } else if (summary.pairwise) {
    for (const [metric, counts] of Object.entries(summary.pairwise)) {
      const row = table.insertRow();
      row.insertCell().textContent = metric.replace(/_/g, " ");
      row.insertCell().textContent = `A: ${counts.A} / B: ${counts.B}`;
    }
  }
  if (table.rows.length > 0) root.appendChild(table);
  return root;
}
