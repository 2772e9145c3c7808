"""Shared fixtures and the acceptance-summary terminal hook."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

import isoflow as iso

def pytest_configure(config):
    # silence the numba TBB-version notice; the workqueue layer is used
    warnings.filterwarnings("ignore", category=Warning, message=".*TBB.*")


@pytest.fixture(scope="session")
def kernel1():
    return iso.make_bump_kernel(1.0)


@pytest.fixture(scope="session")
def profile1(kernel1):
    return iso.build_profile(kernel1)


@pytest.fixture(scope="session")
def constants1(profile1, kernel1):
    return iso.moment_constants(profile1, kernel1)


# ---------------------------------------------------------------------------
# acceptance reporting: tests register one line per criterion; the summary
# is printed at the end of the run so it survives output capture.

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, name: str, passed: bool, detail: str = ""):
    status = "PASS" if passed else "FAIL"
    line = f"[criterion {number:02d}] {status}  {name}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
