// Browser bootstrap: wires the pure renderers to the gateway client.
// Everything testable lives in api.ts / render.ts / validate.ts; this file
// is the thin DOM shell around them.

import { GatewayApiError, GatewayClient } from './api.js';
import {
  presetOverrides,
  renderConfigSummary,
  renderConsentConfirmation,
  renderGrantNotice,
  renderLogTable,
  renderPolicy,
  renderServiceList,
} from './render.js';
import { validateRule, validateSelections } from './validate.js';
import type { ChoiceValue, EventRuleDraft, PolicyView } from './types.js';

const gatewayUrl =
  new URLSearchParams(window.location.search).get('gateway') ?? 'http://127.0.0.1:8081';
const client = new GatewayClient(gatewayUrl);

const main = document.getElementById('main') as HTMLElement;
const status = document.getElementById('status') as HTMLElement;

function showError(err: unknown): void {
  const text =
    err instanceof GatewayApiError ? `${err.code}: ${err.message}` : String(err);
  status.textContent = text;
  status.className = 'status error';
}

function clearStatus(): void {
  status.textContent = '';
  status.className = 'status';
}

async function showServices(): Promise<void> {
  const { services } = await client.listServices();
  main.innerHTML = renderServiceList(services);
  for (const button of main.querySelectorAll<HTMLButtonElement>('.service-link')) {
    button.addEventListener('click', () => {
      void showPolicy(button.dataset.service as string);
    });
  }
}

async function showPolicy(serviceId: string): Promise<void> {
  const [view, { presets }] = await Promise.all([
    client.viewPolicy(serviceId) as Promise<PolicyView>,
    client.listPresets(),
  ]);
  main.innerHTML = renderPolicy(view, presets);
  const form = main.querySelector('form.decisions') as HTMLFormElement;
  let activePreset: { id: string; defaultChoice: ChoiceValue } | null = null;

  for (const button of main.querySelectorAll<HTMLButtonElement>('button.preset')) {
    button.addEventListener('click', () => {
      const defaultChoice = button.dataset.default as ChoiceValue;
      activePreset = { id: button.dataset.preset as string, defaultChoice };
      for (const fieldset of form.querySelectorAll<HTMLElement>('.choice')) {
        for (const input of fieldset.querySelectorAll<HTMLInputElement>('input')) {
          input.checked = input.value === defaultChoice;
        }
      }
      clearStatus();
    });
  }

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const selections: Record<string, ChoiceValue> = {};
    for (const fieldset of form.querySelectorAll<HTMLElement>('.choice')) {
      const method = fieldset.dataset.method as string;
      const picked = fieldset.querySelector<HTMLInputElement>('input:checked');
      if (picked) {
        selections[method] = picked.value as ChoiceValue;
      }
    }
    const check = validateSelections(view.policy, selections);
    if (!check.ok) {
      showError(check.problems.join('; '));
      return;
    }
    clearStatus();
    const submit = activePreset
      ? client.submitPresetChoices(
          serviceId,
          activePreset.id,
          presetOverrides(activePreset.defaultChoice, selections),
        )
      : client.submitChoices(serviceId, selections);
    submit
      .then((confirmation) => {
        main.insertAdjacentHTML('beforeend', renderConsentConfirmation(confirmation));
      })
      .catch(showError);
  });
}

async function showLog(): Promise<void> {
  const view = await client.viewLog();
  main.innerHTML = renderLogTable(view);
}

async function showConfig(): Promise<void> {
  const config = await client.getConfig();
  main.innerHTML = renderConfigSummary(config);
}

function showEmergencyPanel(): void {
  main.innerHTML = `<div class="emergency">
<h2>Emergency rule</h2>
<form id="rule-form">
  <label>rule id <input name="rule_id" value="medical-emergency"></label>
  <label>grantee <input name="grantee" placeholder="service id or role:..."></label>
  <label>scope (comma separated fields) <input name="scope"></label>
  <label>duration seconds <input name="grant_duration" type="number" value="7200"></label>
  <label>trigger JSON <textarea name="trigger">{"kind":"external","claim_id":"unconscious","trusted_keys":[],"freshness":600}</textarea></label>
  <button type="submit">Save rule</button>
</form>
<form id="assertion-form">
  <h3>Post a signed assertion</h3>
  <label>assertion JSON <textarea name="assertion"></textarea></label>
  <button type="submit">Send test assertion</button>
</form>
<div id="grant-result"></div>
</div>`;
  const ruleForm = document.getElementById('rule-form') as HTMLFormElement;
  ruleForm.addEventListener('submit', (event) => {
    event.preventDefault();
    const data = new FormData(ruleForm);
    let rule: EventRuleDraft;
    try {
      rule = {
        rule_id: String(data.get('rule_id') ?? ''),
        grantee: String(data.get('grantee') ?? ''),
        scope: String(data.get('scope') ?? '')
          .split(',')
          .map((s) => s.trim())
          .filter(Boolean),
        grant_duration: Number(data.get('grant_duration') ?? 0),
        trigger: JSON.parse(String(data.get('trigger') ?? '{}')),
      };
    } catch (err) {
      showError(err);
      return;
    }
    const check = validateRule(rule);
    if (!check.ok) {
      showError(check.problems.join('; '));
      return;
    }
    clearStatus();
    client.defineRule(rule).then(clearStatus).catch(showError);
  });
  const assertionForm = document.getElementById('assertion-form') as HTMLFormElement;
  assertionForm.addEventListener('submit', (event) => {
    event.preventDefault();
    const data = new FormData(assertionForm);
    try {
      const assertion = JSON.parse(String(data.get('assertion') ?? '{}'));
      client
        .postAssertion(assertion)
        .then(({ issued }) => {
          (document.getElementById('grant-result') as HTMLElement).innerHTML =
            renderGrantNotice(issued);
        })
        .catch(showError);
    } catch (err) {
      showError(err);
    }
  });
}

const routes: Record<string, () => void | Promise<void>> = {
  services: showServices,
  log: showLog,
  config: showConfig,
  emergency: showEmergencyPanel,
};

for (const [name, handler] of Object.entries(routes)) {
  document.getElementById(`nav-${name}`)?.addEventListener('click', () => {
    clearStatus();
    Promise.resolve(handler()).catch(showError);
  });
}

void Promise.resolve(showServices()).catch(showError);
