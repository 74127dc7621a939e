/** Run console: submit workflows, watch node states, link artifacts. */

import type { ComposerStore } from "../state.js";

export function renderRunConsole(root: HTMLElement, store: ComposerStore): void {
  const state = store.state;
  root.replaceChildren();

  const form = document.createElement("form");
  form.className = "run-form";
  const select = document.createElement("select");
  for (const wf of state.workflows) {
    const option = document.createElement("option");
    option.value = wf.id;
    option.textContent = `${wf.id}: ${wf.title}`;
    option.selected = wf.id === state.selectedWorkflow;
    select.append(option);
  }
  select.addEventListener("change", () => store.selectWorkflow(select.value));
  const seed = document.createElement("input");
  seed.type = "number";
  seed.value = "42";
  seed.title = "seed";
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "run";
  submit.disabled = state.workflows.length === 0;
  form.append(select, seed, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (state.selectedWorkflow) {
      void store.submitRun(state.selectedWorkflow, Number(seed.value || "0"));
    }
  });
  root.append(form);

  for (const run of state.runs) {
    const panel = document.createElement("section");
    panel.className = `run-panel run-${run.status}`;
    panel.dataset.runId = run.run_id;
    const heading = document.createElement("header");
    heading.innerHTML = `<code>${run.run_id}</code> ${run.workflow_id} seed=${run.seed}
      <strong>${run.status}</strong>`;
    if (run.status === "running") {
      const cancel = document.createElement("button");
      cancel.textContent = "cancel";
      cancel.addEventListener("click", () => void store.cancelRun(run.run_id));
      heading.append(cancel);
    }
    panel.append(heading);

    const nodes = document.createElement("ul");
    nodes.className = "node-list";
    for (const [nodeId, nodeRun] of Object.entries(run.nodes).sort()) {
      const item = document.createElement("li");
      item.className = `node-${nodeRun.status}`;
      item.textContent = `${nodeId}: ${nodeRun.status}`;
      if (nodeRun.failure) item.title = nodeRun.failure;
      nodes.append(item);
    }
    panel.append(nodes);

    if (run.artifacts.length > 0) {
      const links = document.createElement("p");
      links.className = "artifact-links";
      for (const artifact of run.artifacts) {
        const anchor = document.createElement("a");
        anchor.href = store.api.artifactUrl(run.run_id, artifact.node, artifact.port);
        anchor.textContent = `${artifact.node}/${artifact.port} (${artifact.kind})`;
        anchor.target = "_blank";
        links.append(anchor, " ");
      }
      panel.append(links);
    }
    root.append(panel);
  }
}
