import { AnnotationApi, ApiError } from "./api";
import { buildRecords, renderForm, showFormError } from "./forms";
import { renderProgress } from "./progress";
import { renderItem } from "./transcript";
import type { NextItemResponse } from "./types";

export type AppConfig = {
  sessionId: string;
  evaluatorId: string;
  baseUrl?: string;
};

/**
 * The whole annotator loop for one evaluator: fetch the next item, render
 * transcript + form, submit on completion, advance. No routing; state is
 * the server's.
 */
export class AnnotationApp {
  private api: AnnotationApi;

  constructor(
    private root: HTMLElement,
    private config: AppConfig,
  ) {
    this.api = new AnnotationApi(config.baseUrl ?? "");
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  private clear(): void {
    this.root.replaceChildren();
  }

  private header(): HTMLElement {
    const header = document.createElement("header");
    header.className = "app-header";
    const title = document.createElement("h1");
    title.textContent = "Dialog evaluation";
    const who = document.createElement("span");
    who.className = "evaluator-badge";
    who.textContent = this.config.evaluatorId;
    header.append(title, who);
    return header;
  }

  private async loadNext(): Promise<void> {
    let payload: NextItemResponse;
    try {
      payload = await this.api.nextItem(this.config.sessionId, this.config.evaluatorId);
    } catch (error) {
      this.renderFatal(error);
      return;
    }
    if ("done" in payload) {
      await this.renderDone();
      return;
    }
    this.clear();
    this.root.appendChild(this.header());

    const itemHeading = document.createElement("h2");
    itemHeading.className = "item-heading";
    itemHeading.textContent =
      payload.form.mode === "pairwise" ? "Compare the two dialogs" : "Rate this dialog";
    this.root.appendChild(itemHeading);
    const itemView = renderItem(payload.item);
    itemView.dataset.itemId = payload.item.item_id;
    this.root.appendChild(itemView);

    const handles = renderForm(payload.form, payload.already_rated, async (state) => {
      handles.submitButton.disabled = true;
      let records;
      try {
        records = buildRecords(
          payload.form,
          state,
          this.config.evaluatorId,
          payload.item.item_id,
        );
        await this.api.submitRatings(this.config.sessionId, records);
      } catch (error) {
        // validation failure: surface inline, keep selections
        showFormError(handles, error instanceof Error ? error.message : String(error));
        handles.refresh();
        return;
      }
      await this.loadNext();
    });
    this.root.appendChild(handles.element);

    try {
      this.root.appendChild(renderProgress(await this.api.summary(this.config.sessionId)));
    } catch {
      // progress is decorative; rating must still work without it
    }
  }

  private async renderDone(): Promise<void> {
    this.clear();
    this.root.appendChild(this.header());
    const done = document.createElement("p");
    done.className = "done-banner";
    done.textContent = "All items rated — thank you!";
    this.root.appendChild(done);
    try {
      this.root.appendChild(renderProgress(await this.api.summary(this.config.sessionId)));
    } catch {
      // summary endpoint unavailable; the banner is enough
    }
  }

  private renderFatal(error: unknown): void {
    this.clear();
    this.root.appendChild(this.header());
    const box = document.createElement("p");
    box.className = "fatal-error";
    box.textContent =
      error instanceof ApiError
        ? `Cannot load session: ${error.detail}`
        : `Cannot reach the annotation service: ${String(error)}`;
    this.root.appendChild(box);
  }
}

/** Entry point: session and evaluator come from the query string. */
export function bootstrap(root: HTMLElement): AnnotationApp | null {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session");
  const evaluatorId = params.get("evaluator");
  if (!sessionId || !evaluatorId) {
    const hint = document.createElement("p");
    hint.className = "fatal-error";
    hint.textContent = "Open this page as /?session=<id>&evaluator=<id>.";
    root.replaceChildren(hint);
    return null;
  }
  const app = new AnnotationApp(root, { sessionId, evaluatorId });
  void app.start();
  return app;
}
