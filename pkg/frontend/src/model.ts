// Pure view-model helpers, kept free of DOM access so node:test can cover
// them without a browser.

import type { DecisionPayload, Proposal, ProposalReport, StateDoc } from "./api.js";

export type BadgeState = "pass" | "fail" | "skipped";

export interface Badges {
  r1: BadgeState;
  r2: BadgeState;
  r3: BadgeState;
}

function badge(value: ProposalReport["r1"]): BadgeState {
  if (value === "pass") return "pass";
  if (value === "skipped") return "skipped";
  return "fail";
}

export function badgeStates(report: ProposalReport | null): Badges {
  if (report === null) {
    return { r1: "skipped", r2: "skipped", r3: "skipped" };
  }
  return { r1: badge(report.r1), r2: badge(report.r2), r3: badge(report.r3) };
}

export interface DecisionDraft {
  kind: "accept" | "reject" | "modify";
  reason?: string;
  sentence?: string;
}

/** Validate a decision draft into a POST payload, or explain what is
 * missing. Mirrors the server's field errors so most mistakes are caught
 * before the round trip. */
export function buildDecisionPayload(
  draft: DecisionDraft,
): { payload: DecisionPayload } | { error: string } {
  if (draft.kind === "accept") {
    return { payload: { decision: "accept" } };
  }
  if (draft.kind === "reject") {
    if (draft.reason !== "nonsensical" && draft.reason !== "wrong-preference") {
      return { error: "pick a rejection reason" };
    }
    return { payload: { decision: "reject", reason: draft.reason } };
  }
  const sentence = (draft.sentence ?? "").trim();
  if (!sentence) {
    return { error: "modify needs a goal sentence" };
  }
  return { payload: { decision: "modify", sentence } };
}

export function describeWorld(state: StateDoc): string[] {
  const lines = [
    `task: ${state.task} (${state.scenario}) — ${state.status}`,
    `agent in ${state.world.agent_at}` +
      (state.world.holding ? `, holding ${state.world.holding}` : ""),
    `backend calls: ${state.ledger.calls} (tokens ${state.ledger.sent}→${state.ledger.received})`,
  ];
  for (const receptacle of state.world.receptacles) {
    const contents = state.world.objects
      .filter((o) => o.at.endsWith(` ${receptacle.name}`))
      .map((o) => o.noun);
    const openness = receptacle.openable ? (receptacle.open ? "open" : "closed") : "";
    lines.push(
      `  ${receptacle.name}${openness ? ` [${openness}]` : ""}: ` +
        (contents.length ? contents.join(", ") : "—"),
    );
  }
  const loose = state.world.objects.filter((o) =>
    state.world.rooms.some((room) => o.at === `in ${room}`),
  );
  if (loose.length) {
    lines.push(`  loose: ${loose.map((o) => o.noun).join(", ")}`);
  }
  return lines;
}

export function proposalSummary(p: Proposal): string[] {
  const lines = [`#${p.id} ${p.sentence}`, `object: ${p.focus_noun} (${p.focus_id})`];
  if (p.response !== null && p.response !== p.sentence) {
    lines.push(`raw response: ${p.response}`);
  }
  return lines;
}

export interface FeedEntry {
  label: string;
  detail: string;
}

const EVENT_LABELS: Record<string, string> = {
  task_started: "task started",
  object_started: "object",
  gap: "gap",
  prompt: "prompt",
  response: "response",
  verified: "verified",
  proposal: "proposal",
  decision: "decision",
  plan: "plan",
  executed: "executed",
  rule: "rule",
  object_done: "object done",
  task_done: "task done",
};

export function describeEvent(event: Record<string, unknown>): FeedEntry {
  const type = String(event.type ?? "?");
  const label = EVENT_LABELS[type] ?? type;
  switch (type) {
    case "object_started":
      return { label, detail: `${event.noun} (${event.containment})` };
    case "gap":
      return { label, detail: String(event.kind) };
    case "prompt":
      return { label, detail: `${event.template}: ${String(event.text).slice(0, 120)}…` };
    case "response":
      return { label, detail: String(event.text) };
    case "verified":
      return { label, detail: event.viable ? "viable" : "not viable" };
    case "proposal": {
      const proposal = event.proposal as { id: number; sentence: string };
      return { label, detail: `#${proposal.id} ${proposal.sentence}` };
    }
    case "decision":
      return { label, detail: JSON.stringify(event.decision) };
    case "plan":
      return { label, detail: `${event.length} steps` };
    case "executed":
      return { label, detail: `state ${String(event.digest)}` };
    case "rule":
      return { label, detail: String(event.rule_id) };
    case "object_done": {
      const outcome = event.outcome as { noun: string; method: string };
      return { label, detail: `${outcome.noun} via ${outcome.method}` };
    }
    case "task_done":
      return { label, detail: "run complete" };
    default:
      return { label, detail: "" };
  }
}

/** Append with a cap so the feed cannot grow without bound. */
export function appendFeed(feed: FeedEntry[], entry: FeedEntry, cap = 250): FeedEntry[] {
  const next = feed.concat([entry]);
  return next.length > cap ? next.slice(next.length - cap) : next;
}

export interface PreferenceRow {
  task: string;
  noun: string;
  sentence: string;
}

export function preferencesToRows(doc: {
  preferences: Record<string, Record<string, string>>;
}): PreferenceRow[] {
  const rows: PreferenceRow[] = [];
  for (const task of Object.keys(doc.preferences).sort()) {
    for (const noun of Object.keys(doc.preferences[task]).sort()) {
      rows.push({ task, noun, sentence: doc.preferences[task][noun] });
    }
  }
  return rows;
}

export function rowsToPreferences(
  rows: PreferenceRow[],
  blocklist: { noun: string; location: string }[],
): { preferences: Record<string, Record<string, string>>; blocklist: typeof blocklist } {
  const preferences: Record<string, Record<string, string>> = {};
  for (const row of rows) {
    if (!row.task.trim() || !row.noun.trim() || !row.sentence.trim()) {
      continue;
    }
    (preferences[row.task.trim()] ??= {})[row.noun.trim()] = row.sentence.trim();
  }
  return { preferences, blocklist };
}
