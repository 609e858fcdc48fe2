"""Shared fixtures: the committed sample CSVs."""

from __future__ import annotations

from pathlib import Path

import pytest

SAMPLES = Path(__file__).resolve().parents[1] / "samples"

_RENDERED: dict[str, bool] = {}


@pytest.fixture
def samples() -> Path:
    return SAMPLES


def note_render(kind: str, ok: bool) -> None:
    _RENDERED[kind] = ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RENDERED:
        return
    ok = all(_RENDERED.values()) and len(_RENDERED) == 4
    word = "PASS" if ok else "FAIL"
    detail = ", ".join(
        f"{kind} {'ok' if good else 'failed'}" for kind, good in sorted(_RENDERED.items())
    )
    terminalreporter.section("acceptance criteria")
    terminalreporter.write_line(
        f"criterion 9: {word} - sample CSVs render to non-empty images ({detail}); "
        "fit line printed to 3 decimals checked in test_regression_prints_fit_from_csv"
    )
