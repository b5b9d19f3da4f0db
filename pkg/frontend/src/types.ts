// Types mirroring the gateway HTTP API (JSON wire shapes).

export type ChoiceValue = 'use' | 'notUsed';

export interface PolicyChoice {
  method: string;
  use: string;
  notUsed: string;
}

export interface DataUse {
  attribute: string;
  purpose: string;
  methods: { method: string; status: 'mandatory' | 'optional' }[];
}

export interface PolicyDocument {
  service_id: string;
  model_digest: string;
  preamble: string;
  data_uses: DataUse[];
  choices: PolicyChoice[];
  methods: { method: string; status: 'mandatory' | 'optional' }[];
}

export interface VerdictMeta {
  service_id: string;
  model_digest: string;
  result: 'pass' | 'fail';
  violations: unknown[];
  audited_at: number;
  signature: string;
}

export interface ServiceListing {
  service_id: string;
  policy: PolicyDocument;
  verdict: VerdictMeta | null;
}

export interface PolicyView {
  service_id: string;
  policy: PolicyDocument;
  rendered: string;
  verdict: VerdictMeta | null;
}

export interface ConsentConfirmation {
  service_id: string;
  model_digest: string;
  granted_fields: string[];
  enabled_methods: string[];
}

export interface LogEntry {
  timestamp: number;
  service_id: string;
  method: string;
  attribute: string;
  purpose: string;
  outcome: string;
  record_ids: string[];
}

export interface LogView {
  verification: { ok: boolean; failure_index: number | null; detail: string };
  entries: LogEntry[];
}

export interface AnnotationView {
  field_id: string;
  level: 'local_only' | 'restricted_to' | 'unrestricted';
  endpoints: string[];
}

export interface GatewayConfig {
  owner_id: string;
  endpoint: string;
  rotation_period: number;
  default_annotation_level: string;
  derived_from_default: [string, string] | null;
  annotations: AnnotationView[];
  consents: unknown[];
  event_rules: { rule_id: string; grantee: string; scope: string[]; grant_duration: number }[];
}

export type Trigger =
  | {
      kind: 'internal';
      field_id: string;
      aggregate: 'latest' | 'min' | 'max' | 'avg';
      window: number;
      comparator: '<' | '<=' | '>' | '>=' | '==' | '!=';
      threshold: number;
    }
  | { kind: 'external'; claim_id: string; trusted_keys: string[]; freshness: number }
  | { kind: 'and'; left: Trigger; right: Trigger }
  | { kind: 'or'; left: Trigger; right: Trigger };

export interface EventRuleDraft {
  rule_id: string;
  grantee: string;
  scope: string[];
  grant_duration: number;
  trigger: Trigger;
}

export interface PresetConfiguration {
  preset_id: string;
  level: 'strict' | 'balanced' | 'permissive';
  default_choice: ChoiceValue;
  default_annotation: string;
  whitelist: string[];
  ttp_signature: string;
}

export interface SignedAssertion {
  claim_id: string;
  subject_owner_id: string;
  asserter_public: string;
  timestamp: number;
  signature: string;
}

export interface IssuedGrant {
  field_id: string;
  grantee: string;
  epochs: [number, number];
  expires_at: number | null;
  rule_id: string | null;
}

export interface GatewayError {
  error: string;
  message: string;
}
