/**
 * App shell: owns the root element, the hash listener, and the render
 * epoch. Each hash change bumps the epoch; view code holds an alive()
 * closure over its epoch, which is how polling stops the moment a route
 * is left and how stale fetches are dropped instead of painted.
 */

import { Api } from "./api.js";
import { clear, h } from "./dom.js";
import { Route, browseRoute, hashOf, parseHash } from "./router.js";
import {
  Ctx,
  renderBrowse,
  renderDetail,
  renderForm,
  renderHistory,
  renderMonitor,
  renderResults,
} from "./views.js";

const DEFAULT_POLL_MS = 500;

export interface AppOptions {
  apiBase?: string;
  fetchFn?: typeof fetch;
  /** Dwell time on a terminal state before the monitor routes onward. */
  settleMs?: number;
  searchDebounceMs?: number;
}

export class App {
  readonly api: Api;
  private root: HTMLElement;
  private epoch = 0;
  private running = false;
  private pollMsCache: number | null = null;
  private settleMs: number;
  private debounceMs: number;
  private onHashChange = (): void => {
    this.renderCurrent();
  };

  constructor(root: HTMLElement, options: AppOptions = {}) {
    this.root = root;
    this.api = new Api(options.apiBase ?? "", options.fetchFn);
    this.settleMs = options.settleMs ?? 800;
    this.debounceMs = options.searchDebounceMs ?? 250;
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    window.addEventListener("hashchange", this.onHashChange);
    this.renderCurrent();
  }

  stop(): void {
    if (!this.running) return;
    this.running = false;
    window.removeEventListener("hashchange", this.onHashChange);
    this.epoch += 1;
    clear(this.root);
  }

  navigate(route: Route): void {
    const target = hashOf(route);
    if (window.location.hash === target) {
      this.renderCurrent();
    } else {
      // the hashchange listener does the rendering
      window.location.hash = target;
    }
  }

  /** The poll interval is the gateway's call; ask once and remember. */
  private async pollMs(): Promise<number> {
    if (this.pollMsCache === null) {
      try {
        this.pollMsCache = (await this.api.config()).poll_ms;
      } catch {
        return DEFAULT_POLL_MS;
      }
    }
    return this.pollMsCache;
  }

  renderCurrent(): void {
    this.epoch += 1;
    const epoch = this.epoch;
    const route = parseHash(window.location.hash);

    const ctx: Ctx = {
      api: this.api,
      navigate: (r) => this.navigate(r),
      replaceRoute: (r) => {
        window.history.replaceState(null, "", hashOf(r));
      },
      alive: () => this.epoch === epoch,
      pollMs: () => this.pollMs(),
      settleMs: this.settleMs,
      debounceMs: this.debounceMs,
    };

    clear(this.root);
    const content = h("main", { class: "content", "data-view": route.view });
    this.root.append(this.topBar(route), content);

    switch (route.view) {
      case "browse":
        renderBrowse(content, ctx, route);
        break;
      case "detail":
        renderDetail(content, ctx, route);
        break;
      case "form":
        renderForm(content, ctx, route);
        break;
      case "monitor":
        renderMonitor(content, ctx, route.runId);
        break;
      case "results":
        renderResults(content, ctx, route.runId);
        break;
      case "history":
        renderHistory(content, ctx);
        break;
    }
  }

  private topBar(route: Route): HTMLElement {
    const link = (target: Route, label: string, active: boolean): HTMLElement => {
      const a = h(
        "a",
        {
          href: hashOf(target),
          class: active ? "nav-link nav-active" : "nav-link",
          onclick: (ev: Event) => {
            ev.preventDefault();
            this.navigate(target);
          },
        },
        label,
      );
      return a;
    };
    const onRuns =
      route.view === "monitor" || route.view === "results" || route.view === "history";
    return h(
      "header",
      { class: "topbar" },
      h("h1", { class: "brand" }, "pocketflow"),
      h(
        "nav",
        {},
        link(browseRoute(), "browse", !onRuns),
        link({ view: "history" }, "history", onRuns),
      ),
    );
  }
}
