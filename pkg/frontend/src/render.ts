// Pure view renderers: data in, HTML string out. Keeping these free of DOM
// and network calls makes every screen testable as a plain function.

import type {
  ConsentConfirmation,
  GatewayConfig,
  IssuedGrant,
  LogView,
  PolicyView,
  PresetConfiguration,
  ServiceListing,
} from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function renderServiceList(services: ServiceListing[]): string {
  if (services.length === 0) {
    return '<p class="empty">No audited services are available.</p>';
  }
  const items = services
    .map(
      (s) => `<li>
  <button class="service-link" data-service="${escapeHtml(s.service_id)}">${escapeHtml(s.service_id)}</button>
  <span class="verdict verdict-${s.verdict?.result ?? 'absent'}">audit: ${escapeHtml(s.verdict?.result ?? 'absent')}</span>
</li>`,
    )
    .join('\n');
  return `<ul class="service-list">\n${items}\n</ul>`;
}

export function renderPresetBar(presets: PresetConfiguration[]): string {
  if (presets.length === 0) {
    return '';
  }
  const buttons = presets
    .map(
      (p) =>
        `<button type="button" class="preset" data-preset="${escapeHtml(p.preset_id)}" data-default="${p.default_choice}">${escapeHtml(p.level)}</button>`,
    )
    .join(' ');
  return `<div class="preset-bar">Apply a default configuration: ${buttons}</div>`;
}

export function renderPolicy(view: PolicyView, presets: PresetConfiguration[] = []): string {
  const doc = view.policy;
  const uses = doc.data_uses
    .map((use) => {
      const readers = use.methods
        .map((m) => `<li>${escapeHtml(m.method)} <em>(${m.status})</em></li>`)
        .join('');
      return `<section class="data-use">
  <h3>${escapeHtml(use.attribute)}</h3>
  <p>is used to: ${escapeHtml(use.purpose)}</p>
  ${readers ? `<ul class="readers">${readers}</ul>` : ''}
</section>`;
    })
    .join('\n');

  let decisions: string;
  if (doc.choices.length === 0) {
    decisions = '<p class="no-decisions">No decisions required.</p>';
  } else {
    decisions = doc.choices
      .map((choice, i) => {
        const name = escapeHtml(choice.method);
        return `<fieldset class="choice" data-method="${name}">
  <legend>${i + 1}. ${name}</legend>
  <label><input type="radio" name="${name}" value="use"> ${escapeHtml(choice.use)}</label>
  <label><input type="radio" name="${name}" value="notUsed"> ${escapeHtml(choice.notUsed)}</label>
</fieldset>`;
      })
      .join('\n');
  }

  return `<article class="policy">
<h2>Privacy policy: ${escapeHtml(doc.service_id)}</h2>
<p class="digest">model digest ${escapeHtml(doc.model_digest)}</p>
${uses}
${doc.choices.length > 0 ? renderPresetBar(presets) : ''}
<form class="decisions">
${decisions}
<button type="submit" class="consent-submit">Grant access</button>
</form>
</article>`;
}

/** Overrides = the choices that differ from the preset's default. */
export function presetOverrides(
  presetDefault: 'use' | 'notUsed',
  selections: Record<string, 'use' | 'notUsed'>,
): Record<string, 'use' | 'notUsed'> {
  const overrides: Record<string, 'use' | 'notUsed'> = {};
  for (const [method, value] of Object.entries(selections)) {
    if (value !== presetDefault) {
      overrides[method] = value;
    }
  }
  return overrides;
}

export function renderConsentConfirmation(confirmation: ConsentConfirmation): string {
  const fields = confirmation.granted_fields
    .map((f) => `<li>${escapeHtml(f)}</li>`)
    .join('');
  return `<div class="confirmation">
<p>Access granted to ${escapeHtml(confirmation.service_id)} for:</p>
<ul class="granted-fields">${fields}</ul>
</div>`;
}

const DENIED_OUTCOMES = new Set([
  'denied_no_consent',
  'denied_no_key',
  'denied_disabled_method',
]);

export function renderLogTable(view: LogView): string {
  const badge = view.verification.ok
    ? '<span class="badge badge-ok">chain verified</span>'
    : `<span class="badge badge-broken">INTEGRITY FAILURE at entry ${view.verification.failure_index ?? '?'}</span>`;
  if (!view.verification.ok) {
    return `<div class="log">${badge}<p class="error">${escapeHtml(view.verification.detail)}</p></div>`;
  }
  if (view.entries.length === 0) {
    return `<div class="log">${badge}<p class="empty">No accesses have been logged yet.</p></div>`;
  }
  const rows = view.entries
    .map((e) => {
      const denied = DENIED_OUTCOMES.has(e.outcome);
      return `<tr class="${denied ? 'denied' : 'allowed'}">
  <td>${e.timestamp}</td>
  <td>${escapeHtml(e.service_id)}</td>
  <td>${escapeHtml(e.method)}</td>
  <td>${escapeHtml(e.attribute)}</td>
  <td>${escapeHtml(e.purpose)}</td>
  <td>${escapeHtml(e.outcome)}</td>
</tr>`;
    })
    .join('\n');
  return `<div class="log">${badge}
<table class="log-table">
<thead><tr><th>time</th><th>service</th><th>method</th><th>attribute</th><th>purpose</th><th>outcome</th></tr></thead>
<tbody>
${rows}
</tbody>
</table>
</div>`;
}

export function renderGrantNotice(issued: IssuedGrant[]): string {
  if (issued.length === 0) {
    return '<p class="grant-notice none">No grant issued.</p>';
  }
  const items = issued
    .map(
      (g) =>
        `<li>${escapeHtml(g.field_id)} to ${escapeHtml(g.grantee)} (epochs ${g.epochs[0]}..${g.epochs[1]}, rule ${escapeHtml(g.rule_id ?? '')})</li>`,
    )
    .join('');
  return `<div class="grant-notice issued"><p>Emergency grants issued:</p><ul>${items}</ul></div>`;
}

export function renderConfigSummary(config: GatewayConfig): string {
  const annotations = config.annotations
    .map(
      (a) =>
        `<li>${escapeHtml(a.field_id)}: ${escapeHtml(a.level)}${
          a.endpoints.length ? ` (${a.endpoints.map(escapeHtml).join(', ')})` : ''
        }</li>`,
    )
    .join('');
  const rules = config.event_rules
    .map((r) => `<li>${escapeHtml(r.rule_id)}: ${escapeHtml(r.grantee)} over ${r.scope.map(escapeHtml).join(', ')}</li>`)
    .join('');
  const preset = config.derived_from_default
    ? `<p>derived from preset ${escapeHtml(config.derived_from_default[0])}</p>`
    : '';
  return `<div class="config">
<h2>Gateway configuration (${escapeHtml(config.owner_id)})</h2>
${preset}
<p>upload endpoint: ${escapeHtml(config.endpoint)}; default flow: ${escapeHtml(config.default_annotation_level)}; rotation every ${config.rotation_period}s</p>
<h3>Annotations</h3><ul>${annotations || '<li>none</li>'}</ul>
<h3>Emergency rules</h3><ul>${rules || '<li>none</li>'}</ul>
</div>`;
}
