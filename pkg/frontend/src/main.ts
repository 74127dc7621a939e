import { ApiClient } from "./api.js";
import { renderCatalog } from "./render/catalog.js";
import { renderRunConsole } from "./render/runConsole.js";
import { renderTrackEditor } from "./render/trackEditor.js";
import { ComposerStore } from "./state.js";

function required(id: string): HTMLElement {
  const element = document.getElementById(id);
  if (!element) throw new Error(`missing #${id}`);
  return element;
}

const store = new ComposerStore(new ApiClient(""));
const banner = required("banner");
const catalogRoot = required("catalog");
const trackRoot = required("track-editor");
const runRoot = required("run-console");

store.subscribe(() => {
  banner.textContent = store.state.banner ?? "";
  banner.hidden = store.state.banner === null;
  renderCatalog(catalogRoot, store);
  renderTrackEditor(trackRoot, store);
  renderRunConsole(runRoot, store);
});

void store.loadCatalog();
void store.loadWorkflows();
