// Test support: replay captured gateway traffic through a fetch mock.
//
// The fixtures under tests/fixtures/ are real request/response pairs recorded
// from a scenario-seeded gateway (scripts/capture_console_fixtures.py in the
// repository root), so these tests exercise the console against byte-real
// API shapes without a running backend.

import { readFileSync } from 'node:fs';

import type { FetchLike } from '../src/api.js';

export interface RecordedPair {
  name: string;
  request: { method: string; path: string; body: unknown };
  response: { status: number; body: unknown };
}

export function loadFixture<T = RecordedPair>(name: string): T {
  const url = new URL(`./fixtures/${name}.json`, import.meta.url);
  return JSON.parse(readFileSync(url, 'utf-8')) as T;
}

export interface TrafficLog {
  sent: { method: string; path: string; body: string | null }[];
  received: unknown[];
}

export function replayFetch(
  pairs: RecordedPair[],
  traffic?: TrafficLog,
): FetchLike {
  const table = new Map<string, RecordedPair>();
  for (const pair of pairs) {
    table.set(`${pair.request.method} ${pair.request.path}`, pair);
  }
  return async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? 'GET';
    const key = `${method} ${url}`;
    const pair = table.get(key);
    if (!pair) {
      throw new Error(`no fixture for ${key}`);
    }
    traffic?.sent.push({ method, path: url, body: (init?.body as string) ?? null });
    traffic?.received.push(pair.response.body);
    return new Response(JSON.stringify(pair.response.body), {
      status: pair.response.status,
      headers: { 'Content-Type': 'application/json' },
    });
  };
}
