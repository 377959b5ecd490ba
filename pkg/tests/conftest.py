from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from svmreg import Dataset

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def data_file(name: str) -> Path:
    """Path to a fetched dataset, skipping the test when it is absent."""
    path = DATA_DIR / name
    if not path.exists():
        pytest.skip(f"{name} not found; run scripts/fetch_data.py to download it")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_data(rng):
    X = rng.standard_normal((60, 2))
    y = np.where(X[:, 0] + 0.5 * rng.standard_normal(60) > 0, 1, -1)
    return Dataset(X, y)


# Acceptance checks register (criterion, check, ok, detail) here; the summary
# hook prints one verdict line per criterion.
ACCEPTANCE: dict[str, list[tuple[str, bool, str]]] = {}
ACCEPTANCE_SKIPPED: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE and not ACCEPTANCE_SKIPPED:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for key in sorted(set(ACCEPTANCE) | set(ACCEPTANCE_SKIPPED), key=lambda k: int(k[1:])):
        checks = ACCEPTANCE.get(key, [])
        if key in ACCEPTANCE_SKIPPED and not checks:
            tr.write_line(f"{key} SKIP  {ACCEPTANCE_SKIPPED[key]}")
            continue
        verdict = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        failed = [name for name, ok, _ in checks if not ok]
        tail = f"  failing: {', '.join(failed)}" if failed else ""
        tr.write_line(f"{key} {verdict}  ({len(checks) - len(failed)}/{len(checks)} checks){tail}")
        for name, ok, detail in checks:
            tr.write_line(f"    {'ok  ' if ok else 'FAIL'} {name}: {detail}")
