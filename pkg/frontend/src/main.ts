// DOM glue for the oversight console. All state lives on the server; a
// reload rebuilds everything from the API.

import { ConsoleApi, Proposal } from "./api.js";
import {
  appendFeed,
  badgeStates,
  buildDecisionPayload,
  describeEvent,
  describeWorld,
  FeedEntry,
  preferencesToRows,
  proposalSummary,
  rowsToPreferences,
} from "./model.js";
import { parseEvent } from "./sse.js";

const api = new ConsoleApi("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

let feed: FeedEntry[] = [];
let currentProposal: Proposal | null = null;

function renderFeed(): void {
  el<HTMLUListElement>("event-feed").innerHTML = feed
    .map(
      (entry) =>
        `<li><span class="event-label">${entry.label}</span> ${escapeHtml(entry.detail)}</li>`,
    )
    .join("");
  const pane = el<HTMLDivElement>("feed-pane");
  pane.scrollTop = pane.scrollHeight;
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

async function refreshState(): Promise<void> {
  try {
    const state = await api.state();
    el<HTMLPreElement>("world-summary").textContent = describeWorld(state).join("\n");
    el<HTMLSpanElement>("status").textContent = state.status;
    if (state.status === "done") {
      const report = await api.report();
      if (report.report) {
        const tally = Object.entries(report.report.category_tally)
          .map(([category, count]) => `${category}: ${count}`)
          .join("\n");
        el<HTMLPreElement>("report-summary").textContent =
          `llm calls: ${report.report.llm_calls}  repairs: ${report.report.repairs}` +
          `  rules: ${report.report.rules_compiled}\n${tally}`;
      }
    }
  } catch (error) {
    el<HTMLSpanElement>("status").textContent = `unreachable (${String(error)})`;
  }
}

async function refreshProposals(): Promise<void> {
  const pending = await api.pendingProposals();
  currentProposal = pending[0] ?? null;
  const pane = el<HTMLDivElement>("proposal-body");
  const controls = el<HTMLDivElement>("decision-controls");
  if (!currentProposal) {
    pane.innerHTML = "<p class=\"muted\">nothing awaiting a decision</p>";
    controls.style.display = "none";
    return;
  }
  controls.style.display = "block";
  const badges = badgeStates(currentProposal.report);
  const badgeHtml = (["r1", "r2", "r3"] as const)
    .map((check) => `<span class="badge ${badges[check]}">${check.toUpperCase()} ${badges[check]}</span>`)
    .join(" ");
  const summary = proposalSummary(currentProposal)
    .map((line) => `<div>${escapeHtml(line)}</div>`)
    .join("");
  const prompt = currentProposal.prompt
    ? `<details><summary>prompt</summary><pre>${escapeHtml(currentProposal.prompt)}</pre></details>`
    : "";
  pane.innerHTML = `${summary}<div class="badges">${badgeHtml}</div>${prompt}`;
}

function showDecisionError(message: string): void {
  el<HTMLDivElement>("decision-error").textContent = message;
}

async function submit(kind: "accept" | "reject" | "modify"): Promise<void> {
  if (!currentProposal) return;
  const draft = {
    kind,
    reason: el<HTMLSelectElement>("reject-reason").value,
    sentence: el<HTMLTextAreaElement>("modify-sentence").value,
  };
  const built = buildDecisionPayload(draft);
  if ("error" in built) {
    showDecisionError(built.error);
    return;
  }
  const failure = await api.submitDecision(currentProposal.id, built.payload);
  if (failure) {
    showDecisionError(
      failure.errors.map((e) => `${e.field}: ${e.message}`).join("; ") ||
        `request failed (${failure.status})`,
    );
    if (failure.status === 409) {
      await refreshProposals();
    }
    return;
  }
  showDecisionError("");
  el<HTMLTextAreaElement>("modify-sentence").value = "";
  await refreshProposals();
}

async function refreshPreferences(): Promise<void> {
  const doc = await api.preferences();
  const rows = preferencesToRows(doc);
  const table = el<HTMLTableSectionElement>("pref-rows");
  table.innerHTML = rows
    .map(
      (row) => `
      <tr>
        <td><input class="pref-task" value="${escapeHtml(row.task)}"></td>
        <td><input class="pref-noun" value="${escapeHtml(row.noun)}"></td>
        <td><input class="pref-sentence" value="${escapeHtml(row.sentence)}"></td>
      </tr>`,
    )
    .join("");
  (window as unknown as { __blocklist: unknown }).__blocklist = doc.blocklist;
}

async function savePreferences(): Promise<void> {
  const rows = Array.from(el<HTMLTableSectionElement>("pref-rows").querySelectorAll("tr")).map(
    (tr) => ({
      task: (tr.querySelector(".pref-task") as HTMLInputElement).value,
      noun: (tr.querySelector(".pref-noun") as HTMLInputElement).value,
      sentence: (tr.querySelector(".pref-sentence") as HTMLInputElement).value,
    }),
  );
  const blocklist =
    ((window as unknown as { __blocklist?: { noun: string; location: string }[] })
      .__blocklist) ?? [];
  const failure = await api.savePreferences({
    ...rowsToPreferences(rows, blocklist),
  });
  el<HTMLDivElement>("pref-status").textContent = failure
    ? failure.errors.map((e) => e.message).join("; ")
    : "saved";
}

function addPreferenceRow(): void {
  const table = el<HTMLTableSectionElement>("pref-rows");
  const row = document.createElement("tr");
  row.innerHTML =
    '<td><input class="pref-task"></td><td><input class="pref-noun"></td>' +
    '<td><input class="pref-sentence" placeholder="The goal is that the … is in the …."></td>';
  table.appendChild(row);
}

function connectEvents(): void {
  const source = new EventSource("/events");
  source.onmessage = (message) => {
    const event = parseEvent(message.data);
    if (!event) return;
    feed = appendFeed(feed, describeEvent(event));
    renderFeed();
    const type = event.type as string;
    if (type === "proposal" || type === "decision") {
      void refreshProposals();
    }
    if (type === "executed" || type === "task_started" || type === "task_done") {
      void refreshState();
    }
  };
  source.onerror = () => {
    // The stream ends with the run; fall back to polling.
    source.close();
  };
}

function wire(): void {
  el<HTMLButtonElement>("btn-accept").addEventListener("click", () => void submit("accept"));
  el<HTMLButtonElement>("btn-reject").addEventListener("click", () => void submit("reject"));
  el<HTMLButtonElement>("btn-modify").addEventListener("click", () => void submit("modify"));
  el<HTMLButtonElement>("btn-pref-add").addEventListener("click", addPreferenceRow);
  el<HTMLButtonElement>("btn-pref-save").addEventListener("click", () => void savePreferences());
  connectEvents();
  void refreshState();
  void refreshProposals();
  void refreshPreferences();
  setInterval(() => {
    void refreshState();
    void refreshProposals();
  }, 2000);
}

document.addEventListener("DOMContentLoaded", wire);
