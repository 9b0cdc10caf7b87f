/** Browser entry point: image left, machine annotations right. */

import { ApiClient } from "./apiClient.js";
import { FormModel, FieldState } from "./formModel.js";
import { ReviewSession } from "./session.js";
import { StatsPanelModel } from "./statsPanel.js";

const STATS_POLL_MS = 5000;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function fieldLabel(state: FieldState): string {
  if (state.field === "emotion_1") return `Emotion 1: ${state.presentedValue}`;
  if (state.field === "emotion_2") return `Emotion 2: ${state.presentedValue}`;
  return `${state.field[0]!.toUpperCase()}${state.field.slice(1)}: ${state.presentedValue}`;
}

function renderForm(
  container: HTMLElement,
  api: ApiClient,
  session: ReviewSession,
  form: FormModel,
  onChange: () => void,
): void {
  container.replaceChildren();
  const image = el("img", "review-image");
  image.src = api.imageUrl(form.item);
  image.alt = form.item.stem;
  container.appendChild(image);

  const panel = el("div", "fields");
  form.fields.forEach((state, index) => {
    const row = el("div", index === form.focusIndex ? "field focused" : "field");
    row.appendChild(el("span", "label", fieldLabel(state)));
    for (const choice of ["yes", "no"] as const) {
      const button = el(
        "button",
        state.verdict === choice ? `verdict ${choice} active` : `verdict ${choice}`,
        choice === "yes" ? "Yes" : "No",
      );
      button.onclick = () => {
        form.focusIndex = index;
        form.setVerdict(state.field, choice);
        onChange();
      };
      row.appendChild(button);
    }
    if (state.showRationale) {
      const rationale = el("input", "rationale");
      rationale.placeholder = "why is this value wrong? (required)";
      rationale.value = state.rationale;
      rationale.oninput = () => {
        form.setRationale(state.field, rationale.value);
        onChange();
      };
      row.appendChild(rationale);
      const corrected = el("input", "corrected");
      corrected.placeholder = "corrected value (optional)";
      corrected.value = state.correctedValue;
      corrected.oninput = () => form.setCorrectedValue(state.field, corrected.value);
      row.appendChild(corrected);
    }
    if (state.error) {
      row.appendChild(el("span", "field-error", state.error));
    }
    panel.appendChild(row);
  });
  const submit = el("button", "submit", "Submit (Enter)");
  submit.disabled = !form.canSubmit();
  submit.onclick = () => void session.submit().then(onChange);
  panel.appendChild(submit);
  if (form.blockers().length > 0) {
    panel.appendChild(el("div", "blockers", form.blockers().join(" | ")));
  }
  container.appendChild(panel);
}

function renderStats(container: HTMLElement, panel: StatsPanelModel): void {
  container.replaceChildren();
  container.appendChild(el("h3", undefined, panel.stale ? "Agreement (stale)" : "Agreement"));
  for (const row of panel.rows()) {
    const line = el("div", "stat-row");
    line.appendChild(el("span", "stat-label", row.label));
    line.appendChild(el("span", "stat-value", row.value));
    container.appendChild(line);
  }
}

export async function boot(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const reviewer = params.get("reviewer") ?? "anonymous";
  const api = new ApiClient("");
  const session = new ReviewSession(api, reviewer);
  const statsPanel = new StatsPanelModel();

  const bannerNode = el("div", "banner");
  const formNode = el("div", "form-area");
  const statsNode = el("aside", "stats-area");
  root.replaceChildren(bannerNode, formNode, statsNode);

  const redraw = () => {
    bannerNode.textContent = session.banner ?? "";
    if (session.state.kind === "reviewing") {
      renderForm(formNode, api, session, session.state.form, redraw);
    } else if (session.state.kind === "drained") {
      formNode.replaceChildren(el("p", undefined, "queue drained, nothing to review"));
    } else if (session.state.kind === "error") {
      const retry = el("button", "retry", "Retry");
      retry.onclick = () => void session.loadNext().then(redraw);
      formNode.replaceChildren(el("p", undefined, session.state.message), retry);
    }
    renderStats(statsNode, statsPanel);
  };

  document.addEventListener("keydown", (event) => {
    if (session.state.kind !== "reviewing") return;
    if (event.target instanceof HTMLInputElement) return;
    const action = session.state.form.handleKey(event.key);
    if (action === "submit") void session.submit().then(redraw);
    if (action !== "ignored") {
      event.preventDefault();
      redraw();
    }
  });

  const pollStats = async () => {
    const result = await api.fetchStats();
    if (result.kind === "stats") statsPanel.update(result.payload);
    else statsPanel.markStale(result.message);
    renderStats(statsNode, statsPanel);
  };
  await session.loadNext();
  redraw();
  await pollStats();
  window.setInterval(() => void pollStats(), STATS_POLL_MS);
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot(document.getElementById("app")!);
}
