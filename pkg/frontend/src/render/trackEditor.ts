/** Track editor: ordered list with inline findings and one-click fixes. */

import { formatWorkload } from "../format.js";
import type { ComposerStore } from "../state.js";

export function renderTrackEditor(root: HTMLElement, store: ComposerStore): void {
  const state = store.state;
  root.replaceChildren();

  const list = document.createElement("ol");
  list.className = "track-list";
  state.track.forEach((moduleId, index) => {
    const item = document.createElement("li");
    item.dataset.moduleId = moduleId;
    const meta = store.moduleById(moduleId);
    const label = document.createElement("span");
    label.textContent = meta ? meta.title : moduleId;
    item.append(label);

    const up = document.createElement("button");
    up.textContent = "↑";
    up.disabled = index === 0;
    up.addEventListener("click", () => void store.moveModule(index, -1));
    const down = document.createElement("button");
    down.textContent = "↓";
    down.disabled = index === state.track.length - 1;
    down.addEventListener("click", () => void store.moveModule(index, 1));
    const remove = document.createElement("button");
    remove.textContent = "✕";
    remove.addEventListener("click", () => void store.removeModule(index));
    item.append(up, down, remove);

    const related = state.report.filter((f) => f.module === moduleId);
    for (const finding of related) {
      const warning = document.createElement("p");
      warning.className = "finding";
      warning.textContent = `${finding.code}: ${finding.message}`;
      item.append(warning);
      for (const suggestion of store.suggestionsFor(finding)) {
        const fix = document.createElement("button");
        fix.className = "suggestion";
        fix.textContent = suggestion.viaAlternative
          ? `insert alternative ${suggestion.title}`
          : `insert ${suggestion.title}`;
        fix.addEventListener("click", () => void store.applySuggestion(finding, suggestion));
        item.append(fix);
      }
    }
    list.append(item);
  });
  root.append(list);

  if (state.track.length === 0) {
    const hint = document.createElement("p");
    hint.className = "empty-note";
    hint.textContent = "empty track: add modules from the catalog";
    root.append(hint);
  }

  const totals = document.createElement("div");
  totals.className = "track-totals";
  if (state.totals) {
    const minutes = state.totals.total_minutes;
    totals.innerHTML = `
      <span class="totals-workload">${formatWorkload(state.totals)}</span>
      <span>${minutes} min total</span>
      <span>max complexity ${state.totals.max_complexity}</span>
      <span>${state.totals.total_exercises} exercises</span>
    `;
  }
  const status = document.createElement("p");
  status.className = state.report.length === 0 ? "track-ok" : "track-warn";
  status.textContent = state.checking
    ? "checking…"
    : state.report.length === 0
      ? "track is valid"
      : `${state.report.length} finding(s)`;
  root.append(totals, status);
}
