"""Local HTTP fixture serving a synthetic multi-service corpus."""
from .manifest import CorpusManifest, default_corpus_dir, load_manifest
from .selfcheck import selfcheck, simulate_crawl
from .server import FixtureServer

__all__ = ["CorpusManifest", "FixtureServer", "default_corpus_dir", "load_manifest", "selfcheck", "simulate_crawl"]
