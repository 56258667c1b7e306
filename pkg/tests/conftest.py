import os
import time
from pathlib import Path

import numpy as np
import pytest

from ternary_polar import cli
from ternary_polar.envelope import build_gstar
from ternary_polar.gfunc import read_gtable
from ternary_polar.scaling import scaling_report


@pytest.fixture(scope="session")
def artifact_dir(tmp_path_factory) -> Path:
    # TERNARY_POLAR_CACHE lets a developer point at a directory that already
    # holds gtable.csv/gdiag.csv; by default everything is built from scratch
    cached = os.environ.get("TERNARY_POLAR_CACHE")
    if cached:
        return Path(cached)
    return tmp_path_factory.mktemp("default_run")


@pytest.fixture(scope="session")
def table_build(artifact_dir):
    """Default table built through the CLI, with its wall time."""
    t0 = time.perf_counter()
    if not (artifact_dir / "gtable.csv").exists():
        assert cli.main(["gtable", "--out", str(artifact_dir)]) == 0
    elapsed = time.perf_counter() - t0
    return read_gtable(artifact_dir / "gtable.csv"), elapsed


@pytest.fixture(scope="session")
def table(table_build):
    return table_build[0]


@pytest.fixture(scope="session")
def run_config(artifact_dir):
    return cli.RunConfig(out=str(artifact_dir))


@pytest.fixture(scope="session")
def diagonal(run_config, table):
    return cli.load_or_build_diagonal(run_config)


@pytest.fixture(scope="session")
def env(table, diagonal):
    return build_gstar(table, diagonal)


@pytest.fixture(scope="session")
def report(env):
    return scaling_report(env.eps_l)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
