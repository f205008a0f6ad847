/** Keyboard mapping: a=accept, r=reject, e=edit, Enter=submit edit,
 * Escape=cancel edit, s=skip (extension: fetches the next card and lets the
 * current lease lapse server-side). */

export type ReviewAction =
  | { kind: 'accept' }
  | { kind: 'reject' }
  | { kind: 'begin-edit' }
  | { kind: 'submit-edit' }
  | { kind: 'cancel-edit' }
  | { kind: 'skip' };

export interface KeyStroke {
  key: string;
  editing: boolean;
  /** True when focus is in an unrelated input; review hotkeys must not fire. */
  typingElsewhere?: boolean;
}

export function interpretKey(stroke: KeyStroke): ReviewAction | null {
  if (stroke.editing) {
    // while the edit box has focus only Enter/Escape act; letters are text
    if (stroke.key === 'Enter') return { kind: 'submit-edit' };
    if (stroke.key === 'Escape') return { kind: 'cancel-edit' };
    return null;
  }
  if (stroke.typingElsewhere) return null;
  switch (stroke.key) {
    case 'a':
      return { kind: 'accept' };
    case 'r':
      return { kind: 'reject' };
    case 'e':
      return { kind: 'begin-edit' };
    case 's':
      return { kind: 'skip' };
    default:
      return null;
  }
}
