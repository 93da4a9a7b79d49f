import shlex
import sys
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
PY = shlex.quote(sys.executable)

# Mock command templates for the translator / trainer protocols.
REV_WORDS = f"{PY} -m bitextkit.mocks rev-words {{direction}} {{strategy}} {{beam_width}} {{temperature}}"
ECHO = f"{PY} -m bitextkit.mocks echo {{direction}} {{strategy}}"
NOOP_TRAINER = f"{PY} -m bitextkit.mocks noop-trainer {{corpus_source}} {{corpus_target}} {{iteration}}"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion, reported in the summary")


_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _results.append((marker.args[0], rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _results:
        line = f"{'PASS' if passed else 'FAIL'}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a measured value to the acceptance summary line."""

    def add(text):
        request.node.user_properties.append(("detail", text))

    return add


def write_lines(path, lines):
    Path(path).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    return Path(path)


@pytest.fixture
def desk_corpus(tmp_path):
    """50 authentic pairs plus 100 monolingual lines per language."""
    d = tmp_path / "data"
    d.mkdir()
    write_lines(d / "auth.en", [f"authentic english sentence {i}" for i in range(50)])
    write_lines(d / "auth.is", [f"ekta íslensk setning {i}" for i in range(50)])
    write_lines(d / "mono.en", [f"monolingual english line {i} here" for i in range(100)])
    write_lines(d / "mono.is", [f"eintyngd íslensk lína {i} hér" for i in range(100)])
    return d
