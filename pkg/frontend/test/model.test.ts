import assert from "node:assert/strict";
import { test } from "node:test";

import type { Proposal, ProposalReport, StateDoc } from "../src/api.js";
import {
  appendFeed,
  badgeStates,
  buildDecisionPayload,
  describeEvent,
  describeWorld,
  preferencesToRows,
  proposalSummary,
  rowsToPreferences,
} from "../src/model.js";

const viableReport: ProposalReport = {
  kind: "goal",
  r1: "pass",
  r2: "pass",
  r3: "pass",
  viable: true,
  sentence: "The goal is that the mug is in the cupboard.",
  repair_issue: null,
};

test("badgeStates maps pass/fail/skipped", () => {
  assert.deepEqual(badgeStates(viableReport), { r1: "pass", r2: "pass", r3: "pass" });
  const failed: ProposalReport = {
    ...viableReport,
    r1: { failure: "unknown-word", detail: "credenza" },
    r2: "skipped",
    r3: "skipped",
    viable: false,
  };
  assert.deepEqual(badgeStates(failed), { r1: "fail", r2: "skipped", r3: "skipped" });
  assert.deepEqual(badgeStates(null), { r1: "skipped", r2: "skipped", r3: "skipped" });
});

test("buildDecisionPayload validates drafts", () => {
  assert.deepEqual(buildDecisionPayload({ kind: "accept" }), {
    payload: { decision: "accept" },
  });
  assert.deepEqual(buildDecisionPayload({ kind: "reject", reason: "nonsensical" }), {
    payload: { decision: "reject", reason: "nonsensical" },
  });
  assert.ok("error" in buildDecisionPayload({ kind: "reject", reason: "meh" }));
  assert.ok("error" in buildDecisionPayload({ kind: "modify", sentence: "  " }));
  assert.deepEqual(
    buildDecisionPayload({ kind: "modify", sentence: " The goal is that the mug is in the sink. " }),
    { payload: { decision: "modify", sentence: "The goal is that the mug is in the sink." } },
  );
});

test("proposalSummary includes id, sentence and provenance", () => {
  const proposal: Proposal = {
    id: 3,
    sentence: "The goal is that the mug is in the cupboard.",
    task: "tidy kitchen",
    focus_id: "obj-01-mug",
    focus_noun: "mug",
    prompt: "(EXAMPLES)…",
    response: "the goal is that the mug is in the cupboard",
    report: viableReport,
    state: "pending",
    decision: null,
  };
  const lines = proposalSummary(proposal);
  assert.match(lines[0], /#3 The goal is that the mug is in the cupboard\./);
  assert.match(lines[1], /mug \(obj-01-mug\)/);
  assert.match(lines[2], /raw response/);
});

test("describeWorld lists receptacles with contents and openness", () => {
  const state: StateDoc = {
    scenario: "kitchen35",
    task: "tidy kitchen",
    status: "running",
    error: null,
    world: {
      agent_at: "kitchen",
      holding: null,
      rooms: ["kitchen"],
      receptacles: [
        { name: "cupboard", openable: true, open: false },
        { name: "sink", openable: false, open: true },
      ],
      objects: [
        { id: "o1", noun: "mug", adjectives: ["clean"], at: "in cupboard" },
        { id: "o2", noun: "sponge", adjectives: [], at: "in sink" },
        { id: "o3", noun: "pan", adjectives: [], at: "in kitchen" },
      ],
      digest: "abc",
    },
    ledger: { sent: 10, received: 5, calls: 2 },
  };
  const lines = describeWorld(state);
  assert.match(lines[0], /tidy kitchen/);
  assert.ok(lines.some((l) => l.includes("cupboard [closed]: mug")));
  assert.ok(lines.some((l) => l.includes("sink: sponge")));
  assert.ok(lines.some((l) => l.includes("loose: pan")));
});

test("describeEvent covers loop transitions", () => {
  assert.deepEqual(
    describeEvent({ type: "object_started", noun: "mug", containment: "in sink" }),
    { label: "object", detail: "mug (in sink)" },
  );
  assert.equal(describeEvent({ type: "verified", viable: false }).detail, "not viable");
  assert.equal(
    describeEvent({ type: "proposal", proposal: { id: 4, sentence: "s" } }).detail,
    "#4 s",
  );
  assert.equal(describeEvent({ type: "task_done" }).detail, "run complete");
  assert.equal(describeEvent({ type: "mystery" }).label, "mystery");
});

test("appendFeed caps length", () => {
  let feed = [{ label: "a", detail: "" }];
  for (let i = 0; i < 300; i += 1) {
    feed = appendFeed(feed, { label: `e${i}`, detail: "" }, 100);
  }
  assert.equal(feed.length, 100);
  assert.equal(feed[feed.length - 1].label, "e299");
});

test("preference rows round trip", () => {
  const doc = {
    preferences: {
      "tidy kitchen": {
        mug: "The goal is that the mug is in the cupboard.",
        pan: "The goal is that the pan is in the cupboard.",
      },
    },
    blocklist: [{ noun: "butter", location: "garbage bin" }],
  };
  const rows = preferencesToRows(doc);
  assert.equal(rows.length, 2);
  const rebuilt = rowsToPreferences(rows, doc.blocklist);
  assert.deepEqual(rebuilt.preferences, doc.preferences);
  assert.deepEqual(rebuilt.blocklist, doc.blocklist);
  // Blank rows are dropped.
  const withBlank = rowsToPreferences(
    rows.concat([{ task: "", noun: "x", sentence: "y" }]),
    [],
  );
  assert.deepEqual(withBlank.preferences, doc.preferences);
});
