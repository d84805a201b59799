/**
 * The six screens, each a plain function rendering into a container.
 *
 * Views own no state beyond their closures: navigation state lives in the
 * URL hash and everything shown is fetched from the gateway on entry, so
 * a reload reconstructs any screen. Async continuations check ctx.alive()
 * after every await and go silent once another render has taken over.
 */

import {
  Api,
  ApiError,
  HistoryRecord,
  InputPortSpec,
  ManifestEntry,
  RunObj,
  TERMINAL_STATES,
  WorkflowCard,
} from "./api.js";
import {
  clear,
  formatBytes,
  formatElapsed,
  h,
  runElapsedSeconds,
  splitLines,
  stars,
  stateChip,
} from "./dom.js";
import { Route, browseRoute, hashOf } from "./router.js";

export interface Ctx {
  api: Api;
  navigate(route: Route): void;
  /** Rewrite the hash without adding a history entry or re-rendering. */
  replaceRoute(route: Route): void;
  /** False once another render (or a stop) has superseded this one. */
  alive(): boolean;
  pollMs(): Promise<number>;
  /** How long a terminal state stays on the monitor before auto-routing. */
  settleMs: number;
  debounceMs: number;
}

const PREVIEW_LINES = 20;

function banner(message: string, onRetry?: () => void): HTMLElement {
  return h(
    "div",
    { class: "banner", role: "alert" },
    h("span", {}, message),
    onRetry
      ? h("button", { class: "retry", onclick: () => onRetry() }, "retry")
      : null,
  );
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  return "gateway unreachable";
}

function navLink(ctx: Ctx, route: Route, label: string): HTMLElement {
  return h(
    "a",
    {
      href: hashOf(route),
      onclick: (ev: Event) => {
        ev.preventDefault();
        ctx.navigate(route);
      },
    },
    label,
  );
}

// ---------------------------------------------------------------------------
// browse
// ---------------------------------------------------------------------------

export function renderBrowse(
  root: HTMLElement,
  ctx: Ctx,
  initial: { query: string; page: number; favs: boolean },
): void {
  const state = { ...initial };

  const searchBox = h("input", {
    type: "search",
    class: "search",
    placeholder: "search workflows",
    "aria-label": "search workflows",
  });
  searchBox.value = state.query;

  const favsToggle = h(
    "button",
    {
      class: "favs-toggle",
      "aria-pressed": state.favs ? "true" : "false",
      onclick: () => {
        state.favs = !state.favs;
        state.page = 1;
        favsToggle.setAttribute("aria-pressed", state.favs ? "true" : "false");
        ctx.replaceRoute(browseRoute(state.query, state.page, state.favs));
        void load();
      },
    },
    "♥ favourites",
  );

  const listArea = h("div", { class: "cards" });
  const pagerArea = h("div", { class: "pager" });

  let debounce: ReturnType<typeof setTimeout> | undefined;
  searchBox.addEventListener("input", () => {
    clearTimeout(debounce);
    debounce = setTimeout(() => {
      if (!ctx.alive()) return;
      state.query = searchBox.value;
      state.page = 1;
      ctx.replaceRoute(browseRoute(state.query, state.page, state.favs));
      void load();
    }, ctx.debounceMs);
  });

  async function load(): Promise<void> {
    clear(listArea);
    clear(pagerArea);
    listArea.append(h("p", { class: "muted" }, "loading…"));
    let page;
    try {
      page = await ctx.api.search(state.query, state.page);
    } catch (err) {
      if (!ctx.alive()) return;
      clear(listArea);
      listArea.append(banner(describeError(err), () => void load()));
      return;
    }
    if (!ctx.alive()) return;
    clear(listArea);

    const items = state.favs ? page.items.filter((w) => w.favourite) : page.items;
    if (items.length === 0) {
      listArea.append(
        h(
          "p",
          { class: "muted empty" },
          state.favs ? "no favourites yet" : "nothing found",
        ),
      );
    }
    for (const item of items) {
      listArea.append(workflowCard(ctx, item, listArea));
    }

    const lastPage = Math.max(1, Math.ceil(page.total / page.per_page));
    if (lastPage > 1 && !state.favs) {
      const go = (delta: number) => {
        state.page += delta;
        ctx.replaceRoute(browseRoute(state.query, state.page, state.favs));
        void load();
      };
      pagerArea.append(
        h(
          "button",
          { disabled: page.page <= 1, onclick: () => go(-1) },
          "‹ prev",
        ),
        h("span", { class: "muted" }, ` ${page.page} / ${lastPage} `),
        h(
          "button",
          { disabled: page.page >= lastPage, onclick: () => go(1) },
          "next ›",
        ),
      );
    }
  }

  root.append(
    h("div", { class: "browse-controls" }, searchBox, favsToggle),
    listArea,
    pagerArea,
  );
  void load();
}

function heartButton(ctx: Ctx, item: WorkflowCard, host: HTMLElement): HTMLElement {
  const button = h(
    "button",
    {
      class: item.favourite ? "heart heart-on" : "heart",
      "aria-pressed": item.favourite ? "true" : "false",
      "aria-label": "favourite",
    },
    item.favourite ? "♥" : "♡",
  );
  button.addEventListener("click", (ev) => {
    ev.stopPropagation();
    void (async () => {
      try {
        if (item.favourite) {
          await ctx.api.removeFavourite(item.ref.id, item.ref.version);
          item.favourite = false;
        } else {
          await ctx.api.addFavourite(item.ref.id, item.ref.version);
          item.favourite = true;
        }
      } catch (err) {
        if (ctx.alive()) host.prepend(banner(describeError(err)));
        return;
      }
      if (!ctx.alive()) return;
      button.textContent = item.favourite ? "♥" : "♡";
      button.className = item.favourite ? "heart heart-on" : "heart";
      button.setAttribute("aria-pressed", item.favourite ? "true" : "false");
    })();
  });
  return button;
}

function workflowCard(ctx: Ctx, item: WorkflowCard, host: HTMLElement): HTMLElement {
  const card = h(
    "article",
    { class: "card", "data-workflow": `${item.ref.id}@${item.ref.version}` },
    h("img", {
      class: "thumb",
      src: ctx.api.diagramUrl(item.ref.id, item.ref.version),
      alt: "",
    }),
    h(
      "div",
      { class: "card-body" },
      h("h2", { class: "card-title" }, item.title),
      h("p", { class: "muted" }, `${item.uploader} · v${item.ref.version}`),
      stars(item.rating),
      h("p", { class: "card-desc" }, item.description),
    ),
    heartButton(ctx, item, host),
  );
  card.addEventListener("click", () =>
    ctx.navigate({ view: "detail", id: item.ref.id, version: item.ref.version }),
  );
  return card;
}

// ---------------------------------------------------------------------------
// detail
// ---------------------------------------------------------------------------

export function renderDetail(
  root: HTMLElement,
  ctx: Ctx,
  target: { id: string; version: number },
): void {
  root.append(h("p", { class: "muted" }, "loading…"));

  void (async () => {
    let meta: WorkflowCard;
    try {
      meta = await ctx.api.workflow(target.id, target.version);
    } catch (err) {
      if (!ctx.alive()) return;
      clear(root);
      root.append(
        banner(describeError(err), () => {
          clear(root);
          renderDetail(root, ctx, target);
        }),
        h("p", {}, navLink(ctx, browseRoute(), "back to browse")),
      );
      return;
    }
    if (!ctx.alive()) return;
    clear(root);

    const runnable = meta.format === "flowlite";
    root.append(
      h(
        "header",
        { class: "detail-head" },
        h("h2", {}, meta.title),
        heartButton(ctx, meta, root),
      ),
      h("p", { class: "muted" }, `${meta.uploader} · v${meta.ref.version}`),
      stars(meta.rating),
      h("p", { class: "muted" }, `${meta.format} · ${meta.license}`),
      h("p", { class: "detail-desc" }, meta.description),
      h("img", {
        class: "diagram",
        src: ctx.api.diagramUrl(target.id, target.version),
        alt: `diagram of ${meta.title}`,
      }),
      runnable
        ? h(
            "button",
            {
              class: "primary run-button",
              onclick: () =>
                ctx.navigate({ view: "form", id: target.id, version: target.version }),
            },
            "Run",
          )
        : h(
            "p",
            { class: "muted" },
            `${meta.format} definitions can be browsed but not run here`,
          ),
    );
  })();
}

// ---------------------------------------------------------------------------
// input form
// ---------------------------------------------------------------------------

interface Field {
  spec: InputPortSpec;
  control: HTMLInputElement | HTMLTextAreaElement;
  wrapper: HTMLElement;
}

export function renderForm(
  root: HTMLElement,
  ctx: Ctx,
  target: { id: string; version: number },
): void {
  root.append(h("p", { class: "muted" }, "loading…"));

  void (async () => {
    let title = `${target.id}@${target.version}`;
    let iface;
    try {
      const [meta, parsed] = await Promise.all([
        ctx.api.workflow(target.id, target.version),
        ctx.api.workflowInterface(target.id, target.version),
      ]);
      title = meta.title;
      iface = parsed;
    } catch (err) {
      if (!ctx.alive()) return;
      clear(root);
      root.append(
        banner(describeError(err)),
        h(
          "p",
          {},
          navLink(
            ctx,
            { view: "detail", id: target.id, version: target.version },
            "back to the workflow",
          ),
        ),
      );
      return;
    }
    if (!ctx.alive()) return;
    clear(root);

    const messages = h("div", { class: "messages" });
    const fields: Field[] = iface.inputs.map((spec) => inputField(spec));

    const form = h("form", { class: "run-form" });
    form.append(
      h("h2", {}, `Run ${title}`),
      messages,
      ...fields.map((f) => f.wrapper),
    );

    const prefillNote = h("span", { class: "muted" });
    const prefill = h(
      "button",
      { type: "button", class: "prefill" },
      "use previous inputs",
    );
    prefill.addEventListener("click", () => {
      void (async () => {
        let past;
        try {
          past = await ctx.api.history();
        } catch (err) {
          if (ctx.alive()) prefillNote.textContent = describeError(err);
          return;
        }
        if (!ctx.alive()) return;
        const record = past.runs.find(
          (r) =>
            r.descriptor.workflow?.id === target.id &&
            r.descriptor.workflow?.version === target.version,
        );
        if (!record) {
          prefillNote.textContent = "no previous run of this workflow";
          return;
        }
        let used = 0;
        for (const bound of record.bindings) {
          if (bound.variant !== "inline" || bound.value === undefined) continue;
          const field = fields.find((f) => f.spec.name === bound.port);
          if (!field) continue;
          field.control.value =
            field.spec.depth === 0
              ? bound.value
              : bound.value.replace(/\n$/, "");
          field.wrapper.classList.remove("field-error");
          used += 1;
        }
        prefillNote.textContent = used
          ? `prefilled from run ${record.descriptor.run_id}`
          : "previous run had no reusable inputs";
      })();
    });

    const launch = h("button", { type: "submit", class: "primary" }, "Launch");
    form.append(h("div", { class: "form-actions" }, prefill, launch), prefillNote);

    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      clear(messages);

      const bindings: Record<string, string | string[]> = {};
      const missing: Field[] = [];
      for (const field of fields) {
        field.wrapper.classList.remove("field-error");
        if (field.spec.depth === 0) {
          const text = field.control.value;
          if (text === "") {
            if (field.spec.required) missing.push(field);
            continue;
          }
          bindings[field.spec.name] = text;
        } else {
          const lines = splitLines(field.control.value);
          if (lines.length === 0) {
            if (field.spec.required) missing.push(field);
            continue;
          }
          bindings[field.spec.name] = lines;
        }
      }
      if (missing.length) {
        for (const field of missing) field.wrapper.classList.add("field-error");
        messages.append(banner("fill the highlighted required inputs"));
        missing[0].control.focus();
        return;
      }

      launch.setAttribute("disabled", "");
      void (async () => {
        let created;
        try {
          created = await ctx.api.launch({
            ref: `${target.id}@${target.version}`,
            bindings,
          });
        } catch (err) {
          if (!ctx.alive()) return;
          launch.removeAttribute("disabled");
          messages.append(banner(describeError(err)));
          if (err instanceof ApiError) {
            for (const port of err.missing) {
              const field = fields.find((f) => f.spec.name === port);
              field?.wrapper.classList.add("field-error");
            }
          }
          return;
        }
        if (!ctx.alive()) return;
        ctx.navigate({ view: "monitor", runId: created.run.run_id });
      })();
    });

    root.append(form);
  })();
}

function inputField(spec: InputPortSpec): Field {
  const control =
    spec.depth === 0
      ? h("input", { type: "text", name: spec.name })
      : h("textarea", { name: spec.name, rows: "4" });
  const hint =
    spec.depth === 0 ? null : h("span", { class: "muted" }, "one item per line");

  const note = h("span", { class: "muted file-note" });
  const picker = h("input", { type: "file", class: "file-pick" });
  picker.addEventListener("change", () => {
    const file = picker.files?.[0];
    if (!file) return;
    const reader = new FileReader();
    note.textContent = "reading…";
    reader.onprogress = (ev) => {
      if (ev.lengthComputable && ev.total > 0) {
        note.textContent = `reading… ${Math.round((ev.loaded / ev.total) * 100)}%`;
      }
    };
    reader.onload = () => {
      control.value = String(reader.result ?? "");
      note.textContent = `loaded ${formatBytes(file.size)} from ${file.name}`;
      wrapper.classList.remove("field-error");
    };
    reader.onerror = () => {
      note.textContent = "could not read that file";
    };
    reader.readAsText(file);
  });

  const wrapper = h(
    "div",
    { class: "field", "data-port": spec.name },
    h(
      "label",
      {},
      h("span", { class: "field-name" }, spec.name + (spec.required ? " *" : "")),
      spec.description ? h("span", { class: "muted" }, spec.description) : null,
      hint,
      control,
    ),
    h("div", { class: "file-row" }, picker, note),
  );
  return { spec, control, wrapper };
}

// ---------------------------------------------------------------------------
// monitor
// ---------------------------------------------------------------------------

export function renderMonitor(root: HTMLElement, ctx: Ctx, runId: string): void {
  const statusArea = h("div", { class: "monitor-status" }, stateChip("…"));
  const elapsedLine = h("p", { class: "muted elapsed" });

  root.append(
    h("h2", {}, "Run"),
    h("p", { class: "run-id mono" }, runId),
    statusArea,
    elapsedLine,
  );

  void (async () => {
    for (;;) {
      if (!ctx.alive()) return;
      let run: RunObj;
      try {
        run = (await ctx.api.run(runId)).run;
      } catch (err) {
        if (!ctx.alive()) return;
        renderRunGone(root, ctx, err, () => renderMonitor(root, ctx, runId));
        return;
      }
      if (!ctx.alive()) return;

      clear(statusArea);
      statusArea.append(stateChip(run.state));
      elapsedLine.textContent = `elapsed ${formatElapsed(
        runElapsedSeconds(run.created_at, run.started_at, run.finished_at),
      )}`;

      if (TERMINAL_STATES.has(run.state)) {
        // leave the final state visible for a beat before moving on
        await sleep(ctx.settleMs);
        if (ctx.alive()) ctx.navigate({ view: "results", runId });
        return;
      }
      await sleep(await ctx.pollMs());
    }
  })();
}

/** 410 and 404 screens shared by monitor and results. */
function renderRunGone(
  root: HTMLElement,
  ctx: Ctx,
  err: unknown,
  retry: () => void,
): void {
  clear(root);
  if (err instanceof ApiError && (err.status === 410 || err.status === 404)) {
    const expired = err.status === 410;
    root.append(
      h(
        "div",
        { class: "run-gone" },
        h("h2", {}, expired ? "run expired" : "run removed"),
        expired && err.run ? stateChip(err.run.state) : null,
        h(
          "p",
          { class: "muted" },
          expired
            ? "the execution service no longer retains this run's data"
            : "the execution service does not know this run",
        ),
        h("p", {}, navLink(ctx, { view: "history" }, "back to history")),
      ),
    );
    return;
  }
  root.append(
    banner(describeError(err), () => {
      clear(root);
      retry();
    }),
    h("p", {}, navLink(ctx, { view: "history" }, "back to history")),
  );
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

// ---------------------------------------------------------------------------
// results
// ---------------------------------------------------------------------------

export function renderResults(root: HTMLElement, ctx: Ctx, runId: string): void {
  root.append(h("p", { class: "muted" }, "loading…"));

  void (async () => {
    let run: RunObj;
    let entries: ManifestEntry[];
    try {
      run = (await ctx.api.run(runId)).run;
      entries = (await ctx.api.outputs(runId)).entries;
    } catch (err) {
      if (!ctx.alive()) return;
      if (err instanceof ApiError && err.status === 409) {
        // outputs are refused until the run settles
        clear(root);
        root.append(
          h("h2", {}, "Run"),
          h("p", { class: "run-id mono" }, runId),
          h("p", { class: "muted" }, "not finished yet"),
          h("p", {}, navLink(ctx, { view: "monitor", runId }, "watch this run")),
        );
        return;
      }
      renderRunGone(root, ctx, err, () => renderResults(root, ctx, runId));
      return;
    }
    if (!ctx.alive()) return;
    clear(root);

    root.append(
      h(
        "header",
        { class: "detail-head" },
        h("h2", {}, "Results"),
        stateChip(run.state),
      ),
      h("p", { class: "run-id mono" }, runId),
      h(
        "p",
        { class: "muted elapsed" },
        `elapsed ${formatElapsed(
          runElapsedSeconds(run.created_at, run.started_at, run.finished_at),
        )}`,
      ),
    );

    const failure = run.state === "Failed" ? entries.find((e) => e.port === "error") : undefined;
    if (failure) {
      const box = h(
        "div",
        { class: "error-entry", role: "alert" },
        h("h3", {}, "run failed"),
      );
      root.append(box);
      try {
        const text = await ctx.api.outputText(runId, failure.port);
        if (!ctx.alive()) return;
        box.append(h("pre", { class: "preview" }, text));
      } catch {
        if (!ctx.alive()) return;
        box.append(h("p", { class: "muted" }, "diagnostic unavailable"));
      }
    }

    const plain = entries.filter((e) => e !== failure);
    if (plain.length === 0 && !failure) {
      root.append(h("p", { class: "muted empty" }, "no outputs"));
    }
    for (const entry of plain) {
      root.append(await outputBlock(ctx, runId, entry));
      if (!ctx.alive()) return;
    }
  })();
}

async function outputBlock(
  ctx: Ctx,
  runId: string,
  entry: ManifestEntry,
): Promise<HTMLElement> {
  const block = h(
    "section",
    { class: "output", "data-port": entry.port },
    h(
      "header",
      { class: "output-head" },
      h("h3", {}, entry.port),
      h(
        "a",
        {
          class: "download",
          href: ctx.api.outputUrl(runId, entry.port),
          download: `${entry.port}.txt`,
        },
        "download",
      ),
    ),
    h(
      "p",
      { class: "muted" },
      `${entry.media_type} · ${formatBytes(entry.byte_size)}` +
        (entry.depth > 0 ? ` · list depth ${entry.depth}` : ""),
    ),
  );

  try {
    const text = await ctx.api.outputText(runId, entry.port);
    const lines = splitLines(text);
    const pre = h("pre", { class: "preview" }, lines.slice(0, PREVIEW_LINES).join("\n"));
    block.append(pre);
    if (lines.length > PREVIEW_LINES) {
      block.append(
        h("p", { class: "muted" }, `+${lines.length - PREVIEW_LINES} more lines`),
      );
    }
  } catch {
    block.append(h("p", { class: "muted" }, "preview unavailable"));
  }
  return block;
}

// ---------------------------------------------------------------------------
// history
// ---------------------------------------------------------------------------

export function renderHistory(root: HTMLElement, ctx: Ctx): void {
  root.append(h("h2", {}, "History"), h("p", { class: "muted" }, "loading…"));

  void (async () => {
    let runs: HistoryRecord[];
    try {
      runs = (await ctx.api.history()).runs;
    } catch (err) {
      if (!ctx.alive()) return;
      clear(root);
      root.append(
        h("h2", {}, "History"),
        banner(describeError(err), () => {
          clear(root);
          renderHistory(root, ctx);
        }),
      );
      return;
    }
    if (!ctx.alive()) return;
    clear(root);
    root.append(h("h2", {}, "History"));

    if (runs.length === 0) {
      root.append(h("p", { class: "muted empty" }, "no runs yet"));
      return;
    }
    const list = h("div", { class: "history" });
    for (const record of runs) {
      list.append(historyRow(ctx, record));
    }
    root.append(list);
  })();
}

function historyRow(ctx: Ctx, record: HistoryRecord): HTMLElement {
  const d = record.descriptor;
  const source = d.workflow ? `${d.workflow.id}@${d.workflow.version}` : "(sent definition)";
  const boundText = record.bindings
    .map((b) => `${b.port}=${b.variant === "inline" ? (b.value ?? "") : (b.name ?? "")}`)
    .join("  ");

  const row = h(
    "article",
    { class: "history-row", "data-run": d.run_id },
    h(
      "header",
      { class: "history-head" },
      h("span", { class: "history-source" }, source),
      stateChip(d.state),
    ),
    h("p", { class: "run-id mono" }, d.run_id),
    d.created_at ? h("p", { class: "muted" }, d.created_at) : null,
    boundText ? h("p", { class: "muted bindings" }, boundText) : null,
    record.note ? h("p", { class: "note" }, record.note) : null,
  );
  row.addEventListener("click", () =>
    ctx.navigate({ view: "monitor", runId: d.run_id }),
  );
  return row;
}
