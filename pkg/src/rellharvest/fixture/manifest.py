"""Reading the corpus manifest (``manifest.json``).

The manifest lists every served path with its body file, media type,
resource type (``service/type`` or null) and the links written in the body
(``href`` as it appears, ``scope`` one of ``in``, ``self``, ``out``). It
also lists redirects and error routes, and the counts a crawl is expected
to produce from given seeds.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from ..errors import FixtureError


def default_corpus_dir() -> Path:
    return Path(str(resources.files("rellharvest").joinpath("fixture").joinpath("corpus")))


@dataclass(frozen=True)
class CorpusEntry:
    path: str
    file: str
    media_type: str
    type: Optional[str]
    links: tuple = ()  # of (href, scope)


@dataclass
class CorpusManifest:
    root: Path
    entries: dict = field(default_factory=dict)  # path -> CorpusEntry
    redirects: dict = field(default_factory=dict)  # path -> (status, location)
    errors: dict = field(default_factory=dict)  # path -> status
    descriptions: tuple = ()
    rules: Optional[str] = None
    expected: dict = field(default_factory=dict)

    def body(self, entry: CorpusEntry) -> bytes:
        return (self.root / entry.file).read_bytes()

    def description_paths(self) -> list[Path]:
        return [self.root / p for p in self.descriptions]

    def rules_path(self) -> Optional[Path]:
        return self.root / self.rules if self.rules else None

    def crawl(self, name: str) -> dict:
        return self.expected["crawls"][name]


def load_manifest(corpus_dir=None) -> CorpusManifest:
    root = Path(corpus_dir) if corpus_dir is not None else default_corpus_dir()
    path = root / "manifest.json"
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise FixtureError(f"no manifest.json in {root}") from None
    except json.JSONDecodeError as exc:
        raise FixtureError(f"{path}: {exc}") from None
    m = CorpusManifest(root)
    try:
        for e in data["resources"]:
            links = tuple((l["href"], l["scope"]) for l in e.get("links", ()))
            for _, scope in links:
                if scope not in ("in", "self", "out"):
                    raise FixtureError(f"{e['path']}: bad link scope {scope!r}")
            m.entries[e["path"]] = CorpusEntry(e["path"], e["file"], e["media_type"], e.get("type"), links)
        for r in data.get("redirects", ()):
            m.redirects[r["path"]] = (int(r.get("status", 301)), r["location"])
        for r in data.get("errors", ()):
            m.errors[r["path"]] = int(r["status"])
    except (KeyError, TypeError) as exc:
        raise FixtureError(f"{path}: malformed manifest ({exc})") from None
    m.descriptions = tuple(data.get("descriptions", ()))
    m.rules = data.get("rules")
    m.expected = data.get("expected", {})
    return m
