/**
 * Keyboard-first review: m = match, u = unmatch, s = skip to next.
 */

export type Action = "match" | "unmatch" | "skip";

const BINDINGS: Record<string, Action> = {
  m: "match",
  u: "unmatch",
  s: "skip",
};

/** Map a key press to a review action; undefined for anything unbound. */
export function actionForKey(key: string): Action | undefined {
  return BINDINGS[key.toLowerCase()];
}

export function bindKeyboard(target: EventTarget, handler: (action: Action) => void): () => void {
  const listener = (event: Event) => {
    const key = (event as KeyboardEvent).key;
    const action = actionForKey(key);
    if (action) {
      event.preventDefault();
      handler(action);
    }
  };
  target.addEventListener("keydown", listener);
  return () => target.removeEventListener("keydown", listener);
}
