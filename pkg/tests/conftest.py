import pytest

from rellharvest.crawler import CrawlConfig
from rellharvest.fixture import FixtureServer, load_manifest
from rellharvest.model import load_description
from rellharvest.pipeline import harvest
from rellharvest.rules import load_rules


@pytest.fixture(scope="session")
def manifest():
    return load_manifest()


@pytest.fixture(scope="session")
def descriptions(manifest):
    return [load_description(p) for p in manifest.description_paths()]


@pytest.fixture(scope="session")
def school_desc(descriptions):
    return next(d for d in descriptions if d.service_id == "school")


@pytest.fixture(scope="session")
def rules(manifest):
    return load_rules(manifest.rules_path())


@pytest.fixture
def server():
    """A fresh fixture server per test, so the request log is test-local."""
    with FixtureServer() as srv:
        yield srv


@pytest.fixture(scope="session")
def shared_server():
    with FixtureServer() as srv:
        yield srv


def run_harvest(srv, manifest, descriptions, rules, scenario, **kw):
    seeds = [srv.url(s) for s in manifest.crawl(scenario)["seeds"]]
    return harvest(descriptions, CrawlConfig(seeds=seeds), rules, **kw)


@pytest.fixture(scope="session")
def composite(shared_server, manifest, descriptions, rules):
    """All four services harvested with identity maps ingested, no inference."""
    return run_harvest(shared_server, manifest, descriptions, rules, "all", compose=True)


# -- acceptance reporting ---------------------------------------------------------

_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "tests": 0})
    if report.when == "call":
        entry["tests"] += 1
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = tuple(marker.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        e = _CRITERIA[number]
        verdict = "PASS" if e["ok"] and e["tests"] else "FAIL"
        plural = "" if e["tests"] == 1 else "s"
        terminalreporter.write_line(f"criterion {number}: {verdict} - {e['title']} ({e['tests']} test{plural})")
