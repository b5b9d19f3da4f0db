// End-to-end console flow against captured gateway traffic: list the
// Listing-1 service, render its policy with the single choice, post consent,
// confirm the granted set, and show a log table whose row count equals the
// platform's entry count. Finally, scan everything that crossed the wire for
// key material.

import { describe, expect, it } from 'vitest';

import { GatewayClient } from '../src/api.js';
import { renderConsentConfirmation, renderLogTable, renderPolicy, renderServiceList } from '../src/render.js';
import { validateSelections } from '../src/validate.js';
import type { LogView, PolicyView } from '../src/types.js';
import { loadFixture, replayFetch } from './helpers.js';
import type { RecordedPair, TrafficLog } from './helpers.js';

const fixtures: RecordedPair[] = ['services', 'policy', 'consent', 'log', 'config'].map((n) =>
  loadFixture(n),
);
const meta = loadFixture<{ fetch_log_entry_count: number }>('meta');
const secrets = loadFixture<Record<string, string>>('secret-material');

describe('console flow against a scenario-seeded gateway', () => {
  it('walks list -> policy -> consent -> log with consistent counts', async () => {
    const traffic: TrafficLog = { sent: [], received: [] };
    const client = new GatewayClient('', replayFetch(fixtures, traffic));

    const { services } = await client.listServices();
    const listHtml = renderServiceList(services);
    expect(listHtml).toContain('assisted-living');

    const view: PolicyView = await client.viewPolicy('assisted-living');
    const policyHtml = renderPolicy(view);
    expect(policyHtml.match(/fieldset class="choice"/g)).toHaveLength(1);
    expect(policyHtml).toContain('Ad funded service');
    expect(policyHtml).toContain('Fee is $1 per Month');

    const selections = { 'Analysis.getPersonalizedAd': 'notUsed' as const };
    expect(validateSelections(view.policy, selections).ok).toBe(true);
    const confirmation = await client.submitChoices('assisted-living', selections);
    const confirmationHtml = renderConsentConfirmation(confirmation);
    expect(confirmationHtml).toContain('Camera.location');
    expect(confirmationHtml).toContain('Camera.recognizedPersons');
    expect(confirmationHtml).not.toContain('Camera.stream');

    const log: LogView = await client.viewLog();
    expect(log.verification.ok).toBe(true);
    expect(log.entries).toHaveLength(meta.fetch_log_entry_count);
    const tableHtml = renderLogTable(log);
    expect(tableHtml.match(/<tr class="/g)).toHaveLength(meta.fetch_log_entry_count);

    // recorded traffic in both directions carries no key material
    const wire = JSON.stringify({ sent: traffic.sent, received: traffic.received });
    for (const [name, value] of Object.entries(secrets)) {
      if (typeof value === 'string' && value.length > 0) {
        expect(wire.includes(value), `secret ${name} leaked into traffic`).toBe(false);
      }
    }
    expect(wire).not.toContain('key_material');
    expect(wire).not.toContain('box_secret');
  });

  it('captured transcript itself is free of key material', () => {
    const transcript = loadFixture<RecordedPair[]>('transcript');
    const wire = JSON.stringify(transcript);
    for (const [name, value] of Object.entries(secrets)) {
      if (typeof value === 'string' && value.length > 0) {
        expect(wire.includes(value), `secret ${name} present in transcript`).toBe(false);
      }
    }
  });
});
