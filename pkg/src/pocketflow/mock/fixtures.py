"""Workflow fixtures served by the mock repository.

The built-in set covers the behaviours clients must handle: a dataflow
workflow with list outputs, one with text munging, an opaque legacy format
that cannot be executed here, and an older revision of one entry. Fixture
sets can also be written to and loaded from a directory so a custom corpus
can be served with ``pocketflow-mock serve --repo-fixtures DIR``.

``search_fixtures`` is the single matching/ordering/pagination definition;
the repo service calls it, and tests probe it directly.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from pocketflow.errors import UnsupportedSchema

SCHEMA = 1

# 1x1 transparent PNG, the smallest useful stand-in for a rendered diagram.
_PNG_DOT = base64.b64decode(
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8"
    "z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg=="
)


def _svg(label: str, boxes: list[str]) -> bytes:
    rows = []
    for i, text in enumerate(boxes):
        y = 20 + i * 50
        rows.append(
            f'<rect x="10" y="{y}" width="220" height="34" rx="6" fill="#dbe9f6" stroke="#356"/>'
            f'<text x="120" y="{y + 22}" text-anchor="middle" font-size="13">{text}</text>'
        )
        if i:
            rows.append(
                f'<line x1="120" y1="{y - 16}" x2="120" y2="{y}" stroke="#356" marker-end="url(#a)"/>'
            )
    height = 20 + len(boxes) * 50
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="240" height="{height}">'
        f'<title>{label}</title>'
        '<defs><marker id="a" markerWidth="8" markerHeight="8" refX="6" refY="3" orient="auto">'
        '<path d="M0,0 L6,3 L0,6 z" fill="#356"/></marker></defs>'
        f"{''.join(rows)}</svg>"
    ).encode("utf-8")


@dataclass(frozen=True)
class WorkflowFixture:
    """One workflow version as stored by the mock repository."""

    workflow_id: str
    version: int
    title: str
    uploader: str
    description: str
    rating: float
    license: str
    format_tag: str  # "flowlite" | "opaque"
    definition: bytes
    diagram: bytes
    diagram_media: str

    def summary_obj(self) -> dict:
        return {
            "id": self.workflow_id,
            "version": self.version,
            "title": self.title,
            "uploader": self.uploader,
            "description": self.description,
            "rating": self.rating,
            "license": self.license,
            "format": self.format_tag,
        }


class FixtureSet:
    """Workflow versions keyed by (id, version)."""

    def __init__(self, fixtures: Iterable[WorkflowFixture] = ()) -> None:
        self._by_key: dict[tuple[str, int], WorkflowFixture] = {}
        for fixture in fixtures:
            self.add(fixture)

    def add(self, fixture: WorkflowFixture) -> None:
        key = (fixture.workflow_id, fixture.version)
        if key in self._by_key:
            raise ValueError(f"duplicate fixture {key}")
        self._by_key[key] = fixture

    def get(self, workflow_id: str, version: int) -> WorkflowFixture | None:
        return self._by_key.get((workflow_id, version))

    def latest(self) -> list[WorkflowFixture]:
        """Newest version of every workflow id."""
        newest: dict[str, WorkflowFixture] = {}
        for fixture in self._by_key.values():
            seen = newest.get(fixture.workflow_id)
            if seen is None or fixture.version > seen.version:
                newest[fixture.workflow_id] = fixture
        return list(newest.values())

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self):
        return iter(sorted(self._by_key.values(), key=lambda f: (f.workflow_id, f.version)))


def search_fixtures(
    fixtures: FixtureSet, query: str, page: int, per_page: int
) -> tuple[int, list[WorkflowFixture]]:
    """Match, order, and paginate the newest version of every workflow.

    Every whitespace-separated query token must occur case-insensitively in
    the title or the description. Results are ordered by rating descending,
    ties broken by workflow id ascending. Returns (total matches, page items).

    Raises ValueError for page < 1 or per_page outside [1, 100].
    """
    if page < 1:
        raise ValueError("page must be >= 1")
    if not 1 <= per_page <= 100:
        raise ValueError("per_page must be within [1, 100]")

    tokens = [t.casefold() for t in query.split()]

    def matches(fixture: WorkflowFixture) -> bool:
        title = fixture.title.casefold()
        description = fixture.description.casefold()
        return all(t in title or t in description for t in tokens)

    hits = [f for f in fixtures.latest() if matches(f)]
    hits.sort(key=lambda f: (-f.rating, f.workflow_id))
    start = (page - 1) * per_page
    return len(hits), hits[start:start + per_page]


# ---------------------------------------------------------------------------
# the built-in corpus
# ---------------------------------------------------------------------------


def _definition(doc: dict) -> bytes:
    return json.dumps(doc, indent=2, sort_keys=True).encode("utf-8")


_PATHWAY_FLOW = {
    "flowlite": 1,
    "name": "gi_to_pathways",
    "inputs": [
        {"name": "gi", "depth": 0, "description": "NCBI GI number of a gene record"}
    ],
    "outputs": [{"name": "pathways", "from": "describe.out"}],
    "processors": [
        {
            "name": "describe",
            "op": "lookup",
            "params": {
                "table": {
                    "84579909": [
                        "path:hsa00564 Glycerophospholipid metabolism",
                        "path:hsa00565 Ether lipid metabolism",
                    ],
                    "4557231": [
                        "path:hsa00010 Glycolysis / Gluconeogenesis",
                    ],
                },
                "default": ["no pathways found"],
            },
            "inputs": {"key": "inputs.gi"},
        }
    ],
}

_PROTEIN_FLOW = {
    "flowlite": 1,
    "name": "protein_discovery",
    "inputs": [
        {"name": "query", "depth": 0, "description": "free-text discovery query"}
    ],
    "outputs": [{"name": "proteins", "from": "shout.out"}],
    "processors": [
        {
            "name": "tokens",
            "op": "split",
            "params": {"sep": " "},
            "inputs": {"x": "inputs.query"},
        },
        {
            "name": "shout",
            "op": "uppercase",
            "params": {},
            "inputs": {"x": "tokens.out"},
        },
    ],
}


def standard_fixtures() -> FixtureSet:
    """The corpus served when no fixture directory is supplied."""
    pathway_v5 = WorkflowFixture(
        workflow_id="2659",
        version=5,
        title="NCBI Gi to Kegg Pathway Descriptions",
        uploader="Paul Fisher",
        description=(
            "Takes an NCBI GI number, finds the matching gene, and returns "
            "descriptions of the KEGG pathways that gene participates in."
        ),
        rating=4.5,
        license="by-sa",
        format_tag="flowlite",
        definition=_definition(_PATHWAY_FLOW),
        diagram=_svg("gi to pathways", ["gi", "describe", "pathways"]),
        diagram_media="image/svg+xml",
    )
    pathway_v4 = replace(
        pathway_v5,
        version=4,
        description=pathway_v5.description + " Previous revision kept for reproducibility.",
    )
    protein = WorkflowFixture(
        workflow_id="74",
        version=4,
        title="BioAID Protein Discovery",
        uploader="Marco Roos",
        description=(
            "Extracts candidate protein mentions for a query term and reports "
            "them as a list, one protein name per line."
        ),
        rating=4.0,
        format_tag="flowlite",
        license="by-nd",
        definition=_definition(_PROTEIN_FLOW),
        diagram=_svg("protein discovery", ["query", "tokens", "shout", "proteins"]),
        diagram_media="image/svg+xml",
    )
    legacy = WorkflowFixture(
        workflow_id="901",
        version=1,
        title="Legacy Sequence Polisher",
        uploader="archive import",
        description=(
            "Polishes raw sequencing reads. Stored in a retired binary format; "
            "kept for browsing and download only."
        ),
        rating=3.2,
        license="unspecified",
        format_tag="opaque",
        definition=b"SCUFL\x00\x01legacy-sequence-polisher\x00\xfe\xedbinary payload",
        diagram=_PNG_DOT,
        diagram_media="image/png",
    )
    return FixtureSet([pathway_v5, pathway_v4, protein, legacy])


# ---------------------------------------------------------------------------
# directory form
# ---------------------------------------------------------------------------

_MEDIA_EXT = {"image/svg+xml": "svg", "image/png": "png"}
_EXT_MEDIA = {v: k for k, v in _MEDIA_EXT.items()}


def write_fixture_dir(fixtures: FixtureSet, root: Path) -> None:
    """Lay a fixture set out as DIR/<id>/<version>/{metadata.json,definition,diagram}."""
    for fixture in fixtures:
        folder = root / fixture.workflow_id / str(fixture.version)
        folder.mkdir(parents=True, exist_ok=True)
        diagram_name = "diagram." + _MEDIA_EXT.get(fixture.diagram_media, "bin")
        definition_name = (
            "definition.json" if fixture.format_tag == "flowlite" else "definition.bin"
        )
        meta = fixture.summary_obj()
        meta.update({"schema": SCHEMA, "diagram_file": diagram_name, "definition_file": definition_name})
        (folder / diagram_name).write_bytes(fixture.diagram)
        (folder / definition_name).write_bytes(fixture.definition)
        (folder / "metadata.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def load_fixture_dir(root: Path) -> FixtureSet:
    """Load a directory produced by write_fixture_dir (or edited by hand)."""
    fixtures = FixtureSet()
    for meta_path in sorted(root.glob("*/*/metadata.json")):
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("schema") != SCHEMA:
            raise UnsupportedSchema(str(meta_path), meta.get("schema"))
        folder = meta_path.parent
        diagram_name = meta["diagram_file"]
        extension = diagram_name.rsplit(".", 1)[-1]
        fixtures.add(WorkflowFixture(
            workflow_id=str(meta["id"]),
            version=int(meta["version"]),
            title=meta["title"],
            uploader=meta.get("uploader", ""),
            description=meta.get("description", ""),
            rating=float(meta.get("rating", 0.0)),
            license=meta.get("license", ""),
            format_tag=meta["format"],
            definition=(folder / meta["definition_file"]).read_bytes(),
            diagram=(folder / diagram_name).read_bytes(),
            diagram_media=_EXT_MEDIA.get(extension, "application/octet-stream"),
        ))
    return fixtures
