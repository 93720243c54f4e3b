"""Description-driven crawl engine.

Starting from seed URIs, the crawler dereferences in-scope resources over
HTTP GET, extracts links with the selectors of the matching representation,
classifies them against the loaded descriptions and hands one
:class:`CrawlRecord` per fetch to a sink. Out-of-scope links are recorded
and never dereferenced. Coverage is best effort: resources not reachable
from the seeds are simply not seen.
"""
from __future__ import annotations

import hashlib
import http.client
import logging
import posixpath
import threading
import time
from collections import Counter, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence, Union
from urllib.parse import urljoin, urlsplit, urlunsplit

from .errors import (
    AmbiguityError,
    ConfigurationError,
    DocumentParseError,
    FetchError,
    NormalizationError,
)
from .model import DescriptionIndex, LinkSpec, ProtocolHint, RellDescription
from .selectors import DocTree, LinkOccurrence, extract_links, is_html_media_type, is_xml_media_type, parse_document

log = logging.getLogger(__name__)

DEFAULT_PORTS = {"http": 80, "https": 443}
REDIRECT_STATUSES = frozenset({301, 302, 303, 307, 308})


def _remove_dot_segments(path: str) -> str:
    # RFC 3986, section 5.2.4
    out: list[str] = []
    inp = path
    while inp:
        if inp.startswith("../"):
            inp = inp[3:]
        elif inp.startswith("./"):
            inp = inp[2:]
        elif inp.startswith("/./"):
            inp = "/" + inp[3:]
        elif inp == "/.":
            inp = "/"
        elif inp.startswith("/../"):
            inp = "/" + inp[4:]
            if out:
                out.pop()
        elif inp == "/..":
            inp = "/"
            if out:
                out.pop()
        elif inp in (".", ".."):
            inp = ""
        else:
            start = 1 if inp.startswith("/") else 0
            nxt = inp.find("/", start)
            if nxt < 0:
                nxt = len(inp)
            out.append(inp[:nxt])
            inp = inp[nxt:]
    return "".join(out)


def normalize_uri(uri: str) -> str:
    """Lowercase scheme and host, drop the default port and the fragment,
    resolve dot segments. The query string is kept verbatim."""
    try:
        parts = urlsplit(uri.strip())
        port = parts.port
    except ValueError as exc:
        raise NormalizationError(f"cannot parse URI {uri!r}: {exc}") from None
    scheme = parts.scheme.lower()
    if not scheme:
        raise NormalizationError(f"URI is not absolute: {uri!r}")
    if not parts.netloc:
        if scheme in DEFAULT_PORTS:
            raise NormalizationError(f"URI has no host: {uri!r}")
        return urlunsplit((scheme, "", parts.path, parts.query, ""))
    host = (parts.hostname or "").lower()
    if not host:
        raise NormalizationError(f"URI has no host: {uri!r}")
    if ":" in host:
        host = f"[{host}]"
    userinfo = parts.netloc.rpartition("@")[0] if "@" in parts.netloc else ""
    netloc = f"{userinfo}@{host}" if userinfo else host
    if port is not None and port != DEFAULT_PORTS.get(scheme):
        netloc = f"{netloc}:{port}"
    path = _remove_dot_segments(parts.path) if parts.path else ""
    if not path and scheme in DEFAULT_PORTS:
        path = "/"
    return urlunsplit((scheme, netloc, path, parts.query, ""))


# -- configuration and records ------------------------------------------------


@dataclass(frozen=True)
class CrawlConfig:
    seeds: tuple[str, ...]
    max_resources: int = 1000
    per_host_delay: int = 0  # milliseconds
    max_redirects: int = 5
    timeout: float = 10.0  # seconds
    user_agent: str = "rellharvest/0.1"
    concurrency: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(self.seeds))
        if self.max_resources < 1:
            raise ConfigurationError("max_resources must be at least 1")
        if not 0 <= self.max_redirects <= 10:
            raise ConfigurationError("max_redirects must be between 0 and 10")
        if self.per_host_delay < 0:
            raise ConfigurationError("per_host_delay must not be negative")
        if self.concurrency < 1:
            raise ConfigurationError("concurrency must be at least 1")
        if self.timeout <= 0:
            raise ConfigurationError("timeout must be positive")


class LinkClass(str, Enum):
    IN_SCOPE = "in_scope"
    COLLECTION_SELF = "collection_self"
    OUT_OF_SCOPE = "out_of_scope"
    INVALID = "invalid"
    NOT_FOLLOWED = "not_followed"  # declared with a method other than GET


class Classification(NamedTuple):
    kind: LinkClass
    target: Optional[tuple[str, str]] = None


@dataclass(frozen=True)
class ClassifiedLink:
    occurrence: LinkOccurrence
    kind: LinkClass
    target: Optional[tuple[str, str]] = None

    @property
    def uri(self) -> Optional[str]:
        return self.occurrence.absolute_uri


@dataclass(frozen=True)
class CrawlRecord:
    request_uri: str
    final_uri: str
    resource_type: tuple[str, str]
    status: Optional[int]
    media_type: str
    body: bytes = field(repr=False)
    body_digest: bytes = field(repr=False)
    link_occurrences: tuple[ClassifiedLink, ...] = ()
    fetched_at: str = ""
    resource_uri: str = ""
    representation_id: Optional[str] = None
    parsed_as: Optional[str] = None
    continuation: bool = False  # a further page of a collection resource
    error: Optional[str] = None
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.error is None and self.status is not None and 200 <= self.status < 300

    @property
    def redirected(self) -> bool:
        return self.final_uri != self.request_uri


@dataclass
class CrawlSummary:
    per_type: Counter = field(default_factory=Counter)
    per_status: Counter = field(default_factory=Counter)
    out_of_scope: set = field(default_factory=set)
    invalid_links: int = 0
    not_followed: int = 0
    duplicates: int = 0
    records: int = 0
    aliases: dict = field(default_factory=dict)  # request URI -> post-redirect URI
    fetch_errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def out_of_scope_count(self) -> int:
        return len(self.out_of_scope)

    def add(self, record: CrawlRecord):
        self.records += 1
        if record.error is not None:
            self.per_status["error"] += 1
            self.fetch_errors.append((record.request_uri, record.error))
        else:
            self.per_status[record.status] += 1
            if record.ok:
                self.per_type[record.resource_type] += 1
        for link in record.link_occurrences:
            if link.kind is LinkClass.OUT_OF_SCOPE:
                self.out_of_scope.add(link.uri)
            elif link.kind is LinkClass.INVALID:
                self.invalid_links += 1
            elif link.kind is LinkClass.NOT_FOLLOWED:
                self.not_followed += 1
        self.warnings.extend(f"{record.request_uri}: {w}" for w in record.warnings)

    def report_lines(self) -> list[str]:
        lines = [f"records={self.records}"]
        for (sid, tid), n in sorted(self.per_type.items()):
            lines.append(f"type.{sid}.{tid}={n}")
        for status, n in sorted(self.per_status.items(), key=lambda kv: str(kv[0])):
            lines.append(f"status.{status}={n}")
        lines.append(f"out_of_scope={self.out_of_scope_count}")
        lines.append(f"invalid_links={self.invalid_links}")
        lines.append(f"not_followed={self.not_followed}")
        lines.append(f"duplicates={self.duplicates}")
        for uri, message in self.fetch_errors:
            lines.append(f"fetch_error={uri} {message}")
        for w in self.warnings:
            lines.append(f"warning={w}")
        return lines


# -- link classification ------------------------------------------------------


def _as_index(descs) -> DescriptionIndex:
    return descs if isinstance(descs, DescriptionIndex) else DescriptionIndex(descs)


def classify_link(occ: LinkOccurrence, spec: LinkSpec,
                  descs: Union[DescriptionIndex, Sequence[RellDescription]]) -> Classification:
    index = _as_index(descs)
    desc, owner, _ = index.owner(spec)
    if not occ.valid:
        return Classification(LinkClass.INVALID)
    if spec.protocol is not None and not spec.protocol.dereferenceable:
        return Classification(LinkClass.NOT_FOLLOWED)
    if urlsplit(occ.absolute_uri).scheme not in DEFAULT_PORTS:
        return Classification(LinkClass.OUT_OF_SCOPE)
    if spec.is_collection:
        return Classification(LinkClass.COLLECTION_SELF, (desc.service_id, owner.id))
    if spec.target is None:
        return Classification(LinkClass.OUT_OF_SCOPE)
    target = desc.resource(spec.target)
    if target.uri_pattern is None or target.matches(occ.absolute_uri):
        return Classification(LinkClass.IN_SCOPE, (desc.service_id, target.id))
    return Classification(LinkClass.OUT_OF_SCOPE)


# -- fetching -----------------------------------------------------------------


class HostThrottle:
    """Reserve request slots so requests to one host are >= delay apart."""

    def __init__(self, delay_ms: int = 0):
        self.delay = delay_ms / 1000.0
        self._lock = threading.Lock()
        self._next: dict[str, float] = {}
        self.history: list[tuple[str, float]] = []

    def wait(self, host: str):
        with self._lock:
            now = time.monotonic()
            start = max(now, self._next.get(host, now))
            self._next[host] = start + self.delay
            self.history.append((host, start))
        pause = start - time.monotonic()
        if pause > 0:
            time.sleep(pause)


class FetchResult(NamedTuple):
    final_uri: str
    status: int
    media_type: str
    body: bytes


def _get(uri: str, headers: dict, timeout: float):
    parts = urlsplit(uri)
    cls = http.client.HTTPSConnection if parts.scheme == "https" else http.client.HTTPConnection
    target = (parts.path or "/") + (f"?{parts.query}" if parts.query else "")
    conn = cls(parts.hostname, parts.port, timeout=timeout)
    try:
        conn.request("GET", target, headers=headers)
        resp = conn.getresponse()
        body = resp.read()
        return resp.status, resp.getheader("Content-Type"), resp.getheader("Location"), body
    finally:
        conn.close()


def fetch(uri: str, hint: Optional[ProtocolHint] = None, cfg: Optional[CrawlConfig] = None,
          accept: str = "*/*", throttle: Optional[HostThrottle] = None) -> FetchResult:
    """GET *uri*, following up to ``cfg.max_redirects`` redirects."""
    cfg = cfg or CrawlConfig(seeds=())
    if hint is not None and hint.method.upper() != "GET":
        raise FetchError(f"refusing to dereference with method {hint.method}")
    current = normalize_uri(uri)
    visited = [current]
    headers = {"Accept": accept, "User-Agent": cfg.user_agent}
    while True:
        parts = urlsplit(current)
        if parts.scheme not in DEFAULT_PORTS:
            raise FetchError(f"unsupported scheme {parts.scheme!r}")
        if throttle is not None:
            throttle.wait(parts.netloc)
        try:
            status, content_type, location, body = _get(current, headers, cfg.timeout)
        except (OSError, http.client.HTTPException) as exc:
            raise FetchError(f"{type(exc).__name__}: {exc}") from None
        if status in REDIRECT_STATUSES and location:
            nxt = normalize_uri(urljoin(current, location))
            if nxt in visited:
                raise FetchError(f"redirect loop via {nxt}")
            if len(visited) > cfg.max_redirects:
                raise FetchError(f"more than {cfg.max_redirects} redirects")
            visited.append(nxt)
            current = nxt
            continue
        media_type = (content_type or "application/octet-stream").split(";")[0].strip().lower()
        return FetchResult(current, status, media_type, body)


# -- frontier and crawl -------------------------------------------------------


class QueueItem(NamedTuple):
    uri: str
    resource_type: tuple[str, str]
    collection_of: Optional[str] = None


class Frontier:
    """FIFO of typed URIs; each normalized URI is admitted at most once."""

    def __init__(self):
        self._queue: deque[QueueItem] = deque()
        self._seen: set[str] = set()

    def admit(self, uri: str, resource_type, collection_of=None) -> bool:
        if uri in self._seen:
            return False
        self._seen.add(uri)
        self._queue.append(QueueItem(uri, resource_type, collection_of))
        return True

    def mark_seen(self, uri: str):
        self._seen.add(uri)

    def seen(self, uri: str) -> bool:
        return uri in self._seen

    def take(self, n: int) -> list[QueueItem]:
        out = []
        while self._queue and len(out) < n:
            out.append(self._queue.popleft())
        return out

    def __len__(self):
        return len(self._queue)


def _accept_header(rt) -> str:
    types = []
    for rep in rt.representations:
        if rep.media_type not in types:
            types.append(rep.media_type)
    return ", ".join(types + ["*/*;q=0.1"]) if types else "*/*"


def _parse_target(rt, media_type: str):
    """Pick the representation spec and the media type to parse as."""
    warnings = []
    rep = rt.representation_for(media_type)
    if rep is None and rt.representations:
        rep = rt.representations[0]
        warnings.append(f"served {media_type} but {rt.id} declares "
                        f"{', '.join(r.media_type for r in rt.representations)}; using {rep.id}")
    parse_as = media_type
    if not (is_html_media_type(parse_as) or is_xml_media_type(parse_as)) and rep is not None:
        parse_as = rep.media_type
    return rep, parse_as, warnings


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


class Crawler:
    """One crawl over a fixed set of descriptions.

    Fetches may run concurrently (``cfg.concurrency``) but frontier
    admission, record construction and sink delivery happen on the calling
    thread, in dequeue order, so results do not depend on thread timing.
    """

    def __init__(self, descs: Sequence[RellDescription], cfg: CrawlConfig,
                 sink: Optional[Callable[[CrawlRecord], None]] = None):
        self.index = _as_index(descs)
        self.cfg = cfg
        self.sink = sink or (lambda record: None)
        self.frontier = Frontier()
        self.throttle = HostThrottle(cfg.per_host_delay)
        self.summary = CrawlSummary()
        self._harvested: set[str] = set()

    def _seed_items(self) -> list[QueueItem]:
        items = []
        for seed in self.cfg.seeds:
            try:
                uri = normalize_uri(seed)
                rtype = self.index.resolve(uri)
            except (NormalizationError, AmbiguityError) as exc:
                raise ConfigurationError(f"seed {seed!r}: {exc}") from None
            if rtype is None:
                raise ConfigurationError(f"seed {seed!r} matches no resource type")
            items.append(QueueItem(uri, rtype))
        return items

    def run(self) -> CrawlSummary:
        for item in self._seed_items():
            self.frontier.admit(*item)
        fetched = 0
        with ThreadPoolExecutor(max_workers=self.cfg.concurrency) as pool:
            while len(self.frontier) and fetched < self.cfg.max_resources:
                batch = [i for i in self.frontier.take(self.cfg.concurrency)
                         if i.uri not in self._harvested]
                batch = batch[: self.cfg.max_resources - fetched]
                if not batch:
                    continue
                fetched += len(batch)
                results = list(pool.map(self._fetch, batch))
                for item, (stamp, result) in zip(batch, results):
                    record = self._record(item, stamp, result)
                    if record is None:
                        continue
                    self.summary.add(record)
                    self.sink(record)
        return self.summary

    def _fetch(self, item: QueueItem):
        rt = self.index.resource(item.resource_type)
        stamp = _now()
        try:
            return stamp, fetch(item.uri, None, self.cfg, _accept_header(rt), self.throttle)
        except (FetchError, NormalizationError) as exc:
            return stamp, exc

    def _record(self, item: QueueItem, stamp: str, result) -> Optional[CrawlRecord]:
        if isinstance(result, Exception):
            log.warning("fetch failed for %s: %s", item.uri, result)
            return CrawlRecord(item.uri, item.uri, item.resource_type, None, "", b"",
                               hashlib.sha256(b"").digest(), (), stamp, item.collection_of or item.uri,
                               error=str(result))
        final = result.final_uri
        rtype = item.resource_type
        if final != item.uri:
            try:
                rtype = self.index.resolve(final) or rtype
            except AmbiguityError:
                pass
            self.frontier.mark_seen(final)
            self.summary.aliases[item.uri] = final
            if final in self._harvested:
                self.summary.duplicates += 1
                return None
        self._harvested.add(final)
        resource_uri = item.collection_of or final
        rt = self.index.resource(rtype)
        base = dict(
            request_uri=item.uri, final_uri=final, resource_type=rtype, status=result.status,
            media_type=result.media_type, body=result.body,
            body_digest=hashlib.sha256(result.body).digest(), fetched_at=stamp,
            resource_uri=resource_uri, continuation=item.collection_of is not None,
        )
        if not 200 <= result.status < 300:
            return CrawlRecord(**base)
        rep, parse_as, warnings = _parse_target(rt, result.media_type)
        try:
            doc = parse_document(result.body, parse_as)
        except DocumentParseError as exc:
            warnings.append(f"unparseable representation: {exc}")
            return CrawlRecord(**base, representation_id=rep.id if rep else None, warnings=tuple(warnings))
        if not isinstance(doc, DocTree):
            return CrawlRecord(**base, representation_id=rep.id if rep else None, warnings=tuple(warnings))
        links = []
        for occ in extract_links(doc, final, rep.links if rep else ()):
            kind, target = classify_link(occ, occ.link, self.index)
            links.append(ClassifiedLink(occ, kind, target))
            if kind is LinkClass.IN_SCOPE:
                self.frontier.admit(occ.absolute_uri, target)
            elif kind is LinkClass.COLLECTION_SELF:
                self.frontier.admit(occ.absolute_uri, rtype, resource_uri)
        return CrawlRecord(**base, link_occurrences=tuple(links), representation_id=rep.id if rep else None,
                           parsed_as=parse_as, warnings=tuple(warnings))


def crawl(descs: Sequence[RellDescription], cfg: CrawlConfig,
          sink: Optional[Callable[[CrawlRecord], None]] = None) -> CrawlSummary:
    """Breadth-first crawl from ``cfg.seeds``; see :class:`Crawler`."""
    return Crawler(descs, cfg, sink).run()
