/**
 * Rule-builder state: a draft plus validation and a dirty flag.
 *
 * Pure state transitions so the editor logic is testable without a DOM;
 * main.ts binds these to form controls.
 */

import {
  AlterationDraft,
  AlterationRule,
  StateSpaceInfo,
  ValidationMessage,
  canonicalText,
  isIdentity,
  targetedStateCount,
  validateDraft,
} from "./alteration.js";

export interface EditorState {
  draft: AlterationDraft;
  dirty: boolean;
  messages: ValidationMessage[];
  space: StateSpaceInfo | null;
}

export function emptyRule(): AlterationRule {
  return {
    players: null,
    regions: null,
    pressure: null,
    slices: null,
    kind: "scale_shot_prob",
    factor: 1.0,
  };
}

export function initialState(space: StateSpaceInfo | null): EditorState {
  const draft = { rules: [emptyRule()] };
  return { draft, dirty: false, messages: validateDraft(draft, space), space };
}

export function withDraft(state: EditorState, draft: AlterationDraft): EditorState {
  return {
    ...state,
    draft,
    dirty: true,
    messages: validateDraft(draft, state.space),
  };
}

export function updateRule(
  state: EditorState,
  index: number,
  patch: Partial<AlterationRule>,
): EditorState {
  const rules = state.draft.rules.map((r, k) => (k === index ? { ...r, ...patch } : r));
  return withDraft(state, { rules });
}

export function addRule(state: EditorState): EditorState {
  return withDraft(state, { rules: [...state.draft.rules, emptyRule()] });
}

export function removeRule(state: EditorState, index: number): EditorState {
  const rules = state.draft.rules.filter((_, k) => k !== index);
  return withDraft(state, { rules });
}

export function canSubmit(state: EditorState): boolean {
  return state.messages.length === 0 && state.draft.rules.length > 0;
}

export interface Preview {
  serialized: string;
  identity: boolean;
  targetedPerRule: number[] | null;
}

export function preview(state: EditorState): Preview {
  return {
    serialized: canonicalText(state.draft),
    identity: isIdentity(state.draft),
    targetedPerRule: state.space
      ? state.draft.rules.map((r) => targetedStateCount(r, state.space!))
      : null,
  };
}
