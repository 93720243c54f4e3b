"""Recompute every expected count in the manifest by brute force.

This deliberately shares no code with the crawler or the selector engine:
links are found with a regular expression over the raw bytes, and crawls
are simulated over the manifest's own link lists.
"""
from __future__ import annotations

import html
import re
from collections import Counter, deque
from urllib.parse import urldefrag, urljoin, urlsplit

from ..errors import FixtureError
from .manifest import CorpusManifest, load_manifest

SIM_BASE = "http://fixture.invalid"
HREF_RE = re.compile(rb"""\b(?:href|src)\s*=\s*(?:"([^"]*)"|'([^']*)')""", re.IGNORECASE)
URI_ELEMENT_RE = re.compile(rb"<(?:\w+:)?uri>\s*([^<\s]+)\s*</(?:\w+:)?uri>")
FN_RE = re.compile(rb'<h1 class="fn">([^<]*)</h1>')
CAMERA_RE = re.compile(rb'class="camera">([^<]*)<')
USER_RE = re.compile(rb"<user\b.*?</user>", re.DOTALL)
TEXTUAL = ("text/", "application/xml", "application/atom+xml")


def raw_links(body: bytes) -> list[str]:
    """href/src attribute values and Atom <uri> contents, in document order."""
    found = []
    for m in HREF_RE.finditer(body):
        found.append((m.start(), (m.group(1) if m.group(1) is not None else m.group(2))))
    for m in URI_ELEMENT_RE.finditer(body):
        found.append((m.start(), m.group(1)))
    return [html.unescape(v.decode("utf-8")) for _, v in sorted(found)]


def _display(uri: str) -> str:
    if uri.startswith(SIM_BASE + "/"):
        return uri[len(SIM_BASE):]
    return uri


def _path(uri: str) -> str:
    parts = urlsplit(uri)
    return parts.path + (f"?{parts.query}" if parts.query else "")


def _resolve(base: str, href: str) -> str:
    return urldefrag(urljoin(base, href))[0]


def _follow_redirects(m: CorpusManifest, path: str) -> str:
    seen = {path}
    while path in m.redirects:
        path = _path(urljoin(SIM_BASE + path, m.redirects[path][1]))
        if path in seen:
            raise FixtureError(f"redirect loop at {path}")
        seen.add(path)
    return path


def simulate_crawl(m: CorpusManifest, seeds) -> dict:
    """Breadth-first walk over the manifest link lists from *seeds*."""
    queue = deque()
    seen = set()
    for s in seeds:
        uri = urljoin(SIM_BASE, s)
        if uri not in seen:
            seen.add(uri)
            queue.append((uri, None))
    harvested = set()
    per_type, per_status = Counter(), Counter()
    out = set()
    records = type_quads = link_quads = graphs = duplicates = 0
    while queue:
        uri, collection = queue.popleft()
        if uri in harvested:
            continue
        final = SIM_BASE + _follow_redirects(m, _path(uri))
        if final != uri:
            seen.add(final)
            if final in harvested:
                duplicates += 1
                continue
        harvested.add(final)
        records += 1
        entry = m.entries.get(_path(final))
        if entry is None:
            per_status[str(m.errors.get(_path(final), 404))] += 1
            continue
        per_status["200"] += 1
        per_type[entry.type] += 1
        graphs += 1
        if collection is None:
            type_quads += 1
        for href, scope in entry.links:
            target = _resolve(final, href)
            if scope == "out":
                out.add(_display(target))
                continue
            link_quads += 1
            if target not in seen:
                seen.add(target)
                queue.append((target, (collection or final) if scope == "self" else None))
    return {
        "records": records,
        "per_type": dict(per_type),
        "per_status": dict(per_status),
        "out_of_scope": sorted(out),
        "type_quads": type_quads,
        "link_quads": link_quads,
        "graphs": graphs,
        "duplicates": duplicates,
    }


def identity_groups(m: CorpusManifest) -> list[list[str]]:
    """Groups of >= 2 account paths (after redirects) from user-map documents."""
    groups = []
    for entry in m.entries.values():
        if not entry.type or not entry.type.startswith("usermap/"):
            continue
        base = SIM_BASE + entry.path
        for user in USER_RE.finditer(m.body(entry)):
            members = []
            for href in raw_links(user.group(0)):
                target = _resolve(base, href)
                if target.startswith(SIM_BASE):
                    target = SIM_BASE + _follow_redirects(m, _path(target))
                if _display(target) not in members:
                    members.append(_display(target))
            if len(members) >= 2:
                groups.append(members)
    return groups


def cameras_by_person(m: CorpusManifest) -> dict[str, list[str]]:
    groups = identity_groups(m)
    names = {}
    for entry in m.entries.values():
        match = FN_RE.search(m.body(entry)) if entry.media_type == "text/html" else None
        if match:
            names[html.unescape(match.group(1).decode("utf-8")).strip()] = entry.path
    out = {}
    for name, path in sorted(names.items()):
        accounts = set()
        for g in groups:
            if path in g:
                accounts.update(g)
        cams = set()
        for entry in m.entries.values():
            if entry.media_type != "text/html":
                continue
            body = m.body(entry)
            camera = CAMERA_RE.search(body)
            if not camera:
                continue
            owners = {_display(_resolve(SIM_BASE + entry.path, href)) for href, scope in entry.links}
            if owners & accounts:
                cams.add(html.unescape(camera.group(1).decode("utf-8")).strip())
        out[name] = sorted(cams)
    return out


def selfcheck(corpus_dir=None) -> list[str]:
    """Discrepancies between the manifest and the corpus; empty means consistent."""
    try:
        m = load_manifest(corpus_dir)
    except FixtureError as exc:
        return [str(exc)]
    problems = []
    if not m.entries:
        problems.append("manifest lists no resources")
    for entry in m.entries.values():
        try:
            body = m.body(entry)
        except OSError as exc:
            problems.append(f"{entry.path}: cannot read {entry.file}: {exc}")
            continue
        if not entry.media_type.startswith(TEXTUAL):
            if entry.links:
                problems.append(f"{entry.path}: binary representation cannot carry links")
            continue
        found = raw_links(body)
        declared = [href for href, _ in entry.links]
        if found != declared:
            problems.append(f"{entry.path}: links in {entry.file} are {found}, manifest says {declared}")
    for path in m.redirects:
        try:
            _follow_redirects(m, path)
        except FixtureError as exc:
            problems.append(str(exc))
    for p in m.description_paths() + ([m.rules_path()] if m.rules_path() else []):
        if not p.is_file():
            problems.append(f"missing file {p}")
    if problems:
        return problems
    for name, expected in sorted(m.expected.get("crawls", {}).items()):
        actual = simulate_crawl(m, expected["seeds"])
        for key, value in actual.items():
            want = expected.get(key)
            if key == "out_of_scope" and want is not None:
                want = sorted(want)
            if want != value:
                problems.append(f"crawl {name}: {key} expected {want!r}, corpus gives {value!r}")
    if "sameas_groups" in m.expected:
        actual_groups = identity_groups(m)
        if actual_groups != m.expected["sameas_groups"]:
            problems.append(f"sameas_groups expected {m.expected['sameas_groups']!r}, corpus gives {actual_groups!r}")
    if "cameras" in m.expected:
        actual_cams = cameras_by_person(m)
        want = {k: sorted(v) for k, v in m.expected["cameras"].items()}
        if actual_cams != want:
            problems.append(f"cameras expected {want!r}, corpus gives {actual_cams!r}")
    return problems
