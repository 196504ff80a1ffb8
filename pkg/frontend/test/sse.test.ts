import assert from "node:assert/strict";
import { test } from "node:test";

import { SSEBuffer, parseEvent } from "../src/sse.js";

test("events split on blank lines across chunk boundaries", () => {
  const buffer = new SSEBuffer();
  assert.deepEqual(buffer.push('data: {"type":"task_st'), []);
  assert.deepEqual(buffer.push('arted"}\n'), []);
  assert.deepEqual(buffer.push("\n"), ['{"type":"task_started"}']);
});

test("keep-alive comments are dropped", () => {
  const buffer = new SSEBuffer();
  const events = buffer.push(': keep-alive\n\ndata: {"type":"decision"}\n\n');
  assert.deepEqual(events, ['{"type":"decision"}']);
});

test("several events in one chunk", () => {
  const buffer = new SSEBuffer();
  const events = buffer.push('data: {"a":1}\n\ndata: {"b":2}\n\n');
  assert.equal(events.length, 2);
});

test("parseEvent tolerates junk", () => {
  assert.deepEqual(parseEvent('{"type":"rule"}'), { type: "rule" });
  assert.equal(parseEvent("not json"), null);
  assert.equal(parseEvent("42"), null);
});
