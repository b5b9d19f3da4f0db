// Gateway API client. The console talks only to the owner's gateway; cloud
// reads arrive proxied through it, so no request ever leaves the PEP trust
// boundary and no key material is ever requested or held here.

import type {
  ChoiceValue,
  ConsentConfirmation,
  EventRuleDraft,
  GatewayConfig,
  GatewayError,
  IssuedGrant,
  LogView,
  PolicyView,
  PresetConfiguration,
  ServiceListing,
  SignedAssertion,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class GatewayApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'GatewayApiError';
  }
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'Content-Type': 'application/json' } };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const payload = await response.json();
    if (!response.ok) {
      const err = payload as GatewayError;
      throw new GatewayApiError(response.status, err.error ?? 'HttpError', err.message ?? '');
    }
    return payload as T;
  }

  listServices(): Promise<{ services: ServiceListing[] }> {
    return this.request('GET', '/services');
  }

  viewPolicy(serviceId: string): Promise<PolicyView> {
    return this.request('GET', `/policy/${serviceId}`);
  }

  submitChoices(
    serviceId: string,
    selections: Record<string, ChoiceValue>,
  ): Promise<ConsentConfirmation> {
    return this.request('POST', `/consent/${serviceId}`, { selections });
  }

  submitPresetChoices(
    serviceId: string,
    presetId: string,
    overrides: Record<string, ChoiceValue>,
  ): Promise<ConsentConfirmation> {
    return this.request('POST', `/consent/${serviceId}`, {
      preset: presetId,
      overrides,
    });
  }

  listPresets(): Promise<{ presets: PresetConfiguration[] }> {
    return this.request('GET', '/presets');
  }

  applyConfigPreset(presetId: string): Promise<{ ok: boolean }> {
    return this.request('PUT', '/config', { apply_preset: presetId });
  }

  revokeConsent(serviceId: string): Promise<{ ok: boolean }> {
    return this.request('DELETE', `/consent/${serviceId}`);
  }

  viewLog(): Promise<LogView> {
    return this.request('GET', '/log');
  }

  getConfig(): Promise<GatewayConfig> {
    return this.request('GET', '/config');
  }

  setAnnotation(
    fieldId: string,
    level: 'local_only' | 'restricted_to' | 'unrestricted',
    endpoints: string[] = [],
  ): Promise<{ ok: boolean }> {
    return this.request('PUT', '/config', {
      annotations: [{ field_id: fieldId, level, endpoints }],
    });
  }

  defineRule(rule: EventRuleDraft): Promise<{ ok: boolean }> {
    return this.request('PUT', '/config', { event_rules: [rule] });
  }

  postAssertion(assertion: SignedAssertion): Promise<{ issued: IssuedGrant[] }> {
    return this.request('POST', '/assertions', assertion);
  }
}
