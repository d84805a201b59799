/** Shared plumbing for the UI tests: spawning the service harness and
 * mounting the app into the jsdom document. */

import { spawn } from "node:child_process";
import { resolve } from "node:path";
import { App, AppOptions } from "../src/app.js";

// vitest runs with the package directory as cwd
const HARNESS = resolve("tests", "harness.py");

export interface Services {
  ui: string;
  repo: string;
  exec: string;
  data: string;
  stop(): Promise<void>;
}

export interface HarnessOptions {
  runSeconds?: number;
  outcome?: string;
  reason?: string;
  retentionSeconds?: number;
}

export async function startServices(opts: HarnessOptions = {}): Promise<Services> {
  const args = [HARNESS];
  if (opts.runSeconds !== undefined) args.push("--run-seconds", String(opts.runSeconds));
  if (opts.outcome !== undefined) args.push("--outcome", opts.outcome);
  if (opts.reason !== undefined) args.push("--reason", opts.reason);
  if (opts.retentionSeconds !== undefined) {
    args.push("--retention-seconds", String(opts.retentionSeconds));
  }

  const child = spawn("python3", args, { stdio: ["pipe", "pipe", "inherit"] });
  const line = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    child.stdout.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const nl = buffer.indexOf("\n");
      if (nl >= 0) resolve(buffer.slice(0, nl));
    });
    child.once("error", reject);
    child.once("exit", (code) => reject(new Error(`harness exited early: ${code}`)));
  });

  const info = JSON.parse(line) as { ui: string; repo: string; exec: string; data: string };
  return {
    ...info,
    stop: () =>
      new Promise<void>((resolve) => {
        child.removeAllListeners("exit");
        child.once("exit", () => resolve());
        child.stdin.end();
        setTimeout(() => child.kill("SIGKILL"), 3000).unref();
      }),
  };
}

/** A fetch wrapper that remembers every request it carried. */
export interface RecordingFetch {
  fn: typeof fetch;
  calls: { url: string; method: string; at: number }[];
}

export function recordingFetch(): RecordingFetch {
  const calls: RecordingFetch["calls"] = [];
  const fn: typeof fetch = (input, init) => {
    const url =
      typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    calls.push({ url, method: init?.method ?? "GET", at: Date.now() });
    return fetch(input, init);
  };
  return { fn, calls };
}

export function mountApp(base: string, opts: AppOptions = {}): App {
  document.body.innerHTML = '<div id="app"></div>';
  const root = document.getElementById("app") as HTMLElement;
  const app = new App(root, { apiBase: base, settleMs: 600, ...opts });
  app.start();
  return app;
}

/** Tear down and boot afresh from the unchanged hash — which is all a
 * browser reload amounts to for an app whose state lives behind the
 * gateway. */
export function remount(app: App, base: string, opts: AppOptions = {}): App {
  app.stop();
  return mountApp(base, opts);
}

export function setHash(hash: string): void {
  window.location.hash = hash;
}

export const sleep = (ms: number): Promise<void> =>
  new Promise((resolve) => setTimeout(resolve, ms));

/** Poll until fn returns something truthy; the jsdom hashchange event and
 * all app rendering are async, so tests observe rather than step. */
export async function until<T>(
  fn: () => T | null | undefined | false,
  label: string,
  timeoutMs = 15000,
): Promise<T> {
  const t0 = Date.now();
  for (;;) {
    const value = fn();
    if (value) return value;
    if (Date.now() - t0 > timeoutMs) {
      throw new Error(`timed out waiting for ${label}`);
    }
    await sleep(40);
  }
}

export function q<E extends Element = HTMLElement>(selector: string): E | null {
  return document.querySelector<E>(selector);
}

export function qa<E extends Element = HTMLElement>(selector: string): E[] {
  return Array.from(document.querySelectorAll<E>(selector));
}

export function text(selector: string): string {
  return q(selector)?.textContent ?? "";
}

/** Fire an input event the way typing would. */
export function typeInto(input: HTMLInputElement, value: string): void {
  input.value = value;
  input.dispatchEvent(new window.Event("input", { bubbles: true }));
}

export function submit(form: HTMLFormElement): void {
  form.dispatchEvent(new window.Event("submit", { bubbles: true, cancelable: true }));
}
