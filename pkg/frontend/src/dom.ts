/** Small DOM construction and formatting helpers. */

type Child = Node | string | null | undefined;
type AttrValue = string | boolean | EventListener | null | undefined;

export function h<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, AttrValue> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (value == null || value === false) continue;
    if (key.startsWith("on") && typeof value === "function") {
      node.addEventListener(key.slice(2), value);
    } else if (value === true) {
      node.setAttribute(key, "");
    } else if (typeof value === "string") {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    if (child == null) continue;
    node.append(child);
  }
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/**
 * Five-star strip for a rating. The filled count is presentation only;
 * the exact number from the gateway is always shown next to it.
 */
export function stars(rating: number): HTMLElement {
  const filled = Math.max(0, Math.min(5, Math.round(rating)));
  const strip = "★".repeat(filled) + "☆".repeat(5 - filled);
  return h(
    "span",
    { class: "stars", "aria-label": `rating ${rating}` },
    h("span", { class: "stars-glyphs" }, strip),
    h("span", { class: "stars-value" }, ` ${rating}`),
  );
}

/** State chip; the label is the state string from the gateway, verbatim. */
export function stateChip(state: string): HTMLElement {
  return h("span", { class: `chip chip-${state}`, "data-state": state }, state);
}

/** "4s", "2m 05s", "1h 03m" — enough resolution for a progress line. */
export function formatElapsed(seconds: number): string {
  const s = Math.max(0, Math.floor(seconds));
  if (s < 60) return `${s}s`;
  if (s < 3600) return `${Math.floor(s / 60)}m ${String(s % 60).padStart(2, "0")}s`;
  return `${Math.floor(s / 3600)}h ${String(Math.floor((s % 3600) / 60)).padStart(2, "0")}m`;
}

/** Seconds spent in a run, from its own timestamps where possible. */
export function runElapsedSeconds(
  createdAt: string | null,
  startedAt: string | null,
  finishedAt: string | null,
  now: Date = new Date(),
): number {
  const from = startedAt ?? createdAt;
  if (!from) return 0;
  const end = finishedAt ? new Date(finishedAt) : now;
  return (end.getTime() - new Date(from).getTime()) / 1000;
}

/** Lines of a text block, without the phantom entry a final newline
 * would otherwise produce. */
export function splitLines(text: string): string[] {
  const lines = text.split("\n");
  if (lines.length && lines[lines.length - 1] === "") lines.pop();
  return lines;
}

export function formatBytes(n: number): string {
  if (n < 1024) return `${n} B`;
  if (n < 1024 * 1024) return `${(n / 1024).toFixed(1)} KiB`;
  return `${(n / (1024 * 1024)).toFixed(1)} MiB`;
}
