// Client-side validation. The gateway re-checks everything; these exist so
// the form blocks obviously invalid submissions before any request is made.

import type { ChoiceValue, EventRuleDraft, PolicyDocument, Trigger } from './types.js';

export interface ValidationResult {
  ok: boolean;
  problems: string[];
}

const MAX_TRIGGER_DEPTH = 4;

export function validateSelections(
  policy: PolicyDocument,
  selections: Record<string, ChoiceValue>,
): ValidationResult {
  const problems: string[] = [];
  for (const choice of policy.choices) {
    const value = selections[choice.method];
    if (value === undefined) {
      problems.push(`decision required for ${choice.method}`);
    } else if (value !== 'use' && value !== 'notUsed') {
      problems.push(`invalid value for ${choice.method}`);
    }
  }
  const known = new Set(policy.choices.map((c) => c.method));
  for (const method of Object.keys(selections)) {
    if (!known.has(method)) {
      problems.push(`unknown decision ${method}`);
    }
  }
  return { ok: problems.length === 0, problems };
}

export function triggerDepth(trigger: Trigger): number {
  if (trigger.kind === 'and' || trigger.kind === 'or') {
    return 1 + Math.max(triggerDepth(trigger.left), triggerDepth(trigger.right));
  }
  return 1;
}

export function validateRule(rule: EventRuleDraft): ValidationResult {
  const problems: string[] = [];
  if (!rule.rule_id.trim()) {
    problems.push('rule id must not be empty');
  }
  if (!rule.grantee.trim()) {
    problems.push('grantee must not be empty');
  }
  if (rule.scope.length === 0) {
    problems.push('scope must name at least one field');
  }
  if (rule.grant_duration <= 0 || rule.grant_duration > 7 * 24 * 3600) {
    problems.push('grant duration must be positive and at most 7 days');
  }
  if (triggerDepth(rule.trigger) > MAX_TRIGGER_DEPTH) {
    problems.push(`trigger nesting exceeds depth ${MAX_TRIGGER_DEPTH}`);
  }
  return { ok: problems.length === 0, problems };
}

export function validateAnnotation(
  level: 'local_only' | 'restricted_to' | 'unrestricted',
  endpoints: string[],
): ValidationResult {
  if (level === 'restricted_to' && endpoints.length === 0) {
    return { ok: false, problems: ['restricted_to needs at least one endpoint'] };
  }
  return { ok: true, problems: [] };
}
