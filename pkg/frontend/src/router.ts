/**
 * Hash routing. The fragment is the whole navigation state, so a reload
 * (or a pasted link) lands on the same view with the same subject.
 */

export type Route =
  | { view: "browse"; query: string; page: number; favs: boolean }
  | { view: "detail"; id: string; version: number }
  | { view: "form"; id: string; version: number }
  | { view: "monitor"; runId: string }
  | { view: "results"; runId: string }
  | { view: "history" };

export function browseRoute(query = "", page = 1, favs = false): Route {
  return { view: "browse", query, page, favs };
}

export function hashOf(route: Route): string {
  switch (route.view) {
    case "browse": {
      const params = new URLSearchParams();
      if (route.query) params.set("q", route.query);
      if (route.page > 1) params.set("p", String(route.page));
      if (route.favs) params.set("fav", "1");
      const tail = params.toString();
      return tail ? `#/?${tail}` : "#/";
    }
    case "detail":
      return `#/workflows/${encodeURIComponent(route.id)}/${route.version}`;
    case "form":
      return `#/workflows/${encodeURIComponent(route.id)}/${route.version}/run`;
    case "monitor":
      return `#/runs/${encodeURIComponent(route.runId)}`;
    case "results":
      return `#/runs/${encodeURIComponent(route.runId)}/results`;
    case "history":
      return "#/history";
  }
}

/** Anything unrecognized falls back to browse, never an error page. */
export function parseHash(hash: string): Route {
  const raw = hash.replace(/^#/, "");
  const [path, queryText] = splitOnce(raw, "?");
  const parts = path.split("/").filter((p) => p.length > 0);

  if (parts.length === 0) {
    const params = new URLSearchParams(queryText);
    const page = Number(params.get("p") ?? "1");
    return browseRoute(
      params.get("q") ?? "",
      Number.isInteger(page) && page > 0 ? page : 1,
      params.get("fav") === "1",
    );
  }

  if (parts[0] === "history" && parts.length === 1) {
    return { view: "history" };
  }

  if (parts[0] === "workflows" && (parts.length === 3 || parts.length === 4)) {
    const version = Number(parts[2]);
    if (Number.isInteger(version) && version > 0) {
      const id = decodeURIComponent(parts[1]);
      if (parts.length === 3) return { view: "detail", id, version };
      if (parts[3] === "run") return { view: "form", id, version };
    }
  }

  if (parts[0] === "runs" && (parts.length === 2 || parts.length === 3)) {
    const runId = decodeURIComponent(parts[1]);
    if (parts.length === 2) return { view: "monitor", runId };
    if (parts[2] === "results") return { view: "results", runId };
  }

  return browseRoute();
}

function splitOnce(text: string, sep: string): [string, string] {
  const at = text.indexOf(sep);
  return at < 0 ? [text, ""] : [text.slice(0, at), text.slice(at + 1)];
}
