import os
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parents[1]
_acceptance_lines = []


def canonical_dataset_path():
    """The measured table, if present: $GENFORGE_DATASET or data/airfoil_self_noise.dat."""
    env = os.environ.get("GENFORGE_DATASET")
    path = Path(env) if env else REPO / "data" / "airfoil_self_noise.dat"
    return path if path.is_file() else None


@pytest.fixture(scope="session")
def acceptance_log():
    def record(number, ok, detail):
        _acceptance_lines.append((number, f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {detail}"))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_acceptance_lines, key=lambda t: t[0]):
        terminalreporter.write_line(line)
