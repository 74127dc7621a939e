/** Catalog panel: filter controls mapping 1:1 to search query fields. */

import { formatDuration, formatPrice, formatStars } from "../format.js";
import type { ComposerStore } from "../state.js";
import type { CatalogFilters } from "../types.js";

function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function renderCatalog(root: HTMLElement, store: ComposerStore): void {
  const state = store.state;
  root.replaceChildren();

  const controls = document.createElement("form");
  controls.className = "catalog-filters";
  controls.innerHTML = `
    <input name="keyword" placeholder="keyword" value="${esc(state.filters.keyword ?? "")}">
    <select name="scale">
      <option value="">any scale</option>
      ${["nano", "micro", "mini", "macro"]
        .map(
          (s) =>
            `<option value="${s}" ${state.filters.scale === s ? "selected" : ""}>${s}</option>`,
        )
        .join("")}
    </select>
    <input name="category_prefix" placeholder="category" value="${esc(state.filters.category_prefix ?? "")}">
    <input name="language" placeholder="language" value="${esc(state.filters.language ?? "")}">
    <input name="max_complexity" type="number" min="1" max="5" placeholder="max cx"
           value="${esc(state.filters.max_complexity ?? "")}">
    <button type="submit">filter</button>
  `;
  controls.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(controls);
    const filters: CatalogFilters = {};
    const keyword = String(data.get("keyword") ?? "").trim();
    const scale = String(data.get("scale") ?? "");
    const category = String(data.get("category_prefix") ?? "").trim();
    const language = String(data.get("language") ?? "").trim();
    const maxComplexity = String(data.get("max_complexity") ?? "").trim();
    if (keyword) filters.keyword = keyword;
    if (scale) filters.scale = scale;
    if (category) filters.category_prefix = category;
    if (language) filters.language = language;
    if (maxComplexity) filters.max_complexity = Number(maxComplexity);
    void store.loadCatalog(filters);
  });
  root.append(controls);

  const list = document.createElement("div");
  list.className = "catalog-list";
  for (const meta of state.catalog) {
    const card = document.createElement("article");
    card.className = "module-card";
    card.dataset.moduleId = meta.id;
    card.innerHTML = `
      <header>
        <span class="scale-badge scale-${esc(meta.scale)}">${esc(meta.scale)}</span>
        <strong>${esc(meta.title)}</strong>
      </header>
      <p class="meta-line">
        ${esc(formatDuration(meta.duration_minutes))} ·
        ${esc(meta.workload.min_hours_per_week)}-${esc(meta.workload.max_hours_per_week)} h/wk ·
        complexity ${esc(meta.complexity)} · ${esc(formatPrice(meta.price))}
      </p>
      <p class="rating-line">${esc(formatStars(meta))}</p>
      <p class="keyword-line">${esc(meta.keywords.join(", "))}</p>
    `;
    const add = document.createElement("button");
    add.textContent = "add to track";
    add.addEventListener("click", () => void store.addModule(meta.id));
    card.append(add);
    list.append(card);
  }
  if (state.catalog.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-note";
    empty.textContent = "no modules match the filters";
    list.append(empty);
  }
  root.append(list);
}
