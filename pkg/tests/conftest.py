"""Shared randomized-model builders and the acceptance summary hook."""

import numpy as np
import pytest

from remskit import (
    FarFieldPattern,
    ReMSModel,
    RFFrontend,
    TuningNetwork,
    random_passive_structure,
)
from remskit.network import max_singular_value

FREQ = 5.4e9

_ACCEPTANCE = []


def random_tuning(rng, n, m):
    dim = n + m
    s = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    s *= 0.95 / max_singular_value(s)
    return TuningNetwork(n, m, s)


def random_frontend(rng, n_tx, n_rx, r0=50.0):
    def zs(k):
        return rng.uniform(5.0, 150.0, k) + 1j * rng.uniform(-80.0, 80.0, k)

    return RFFrontend(z_tx=zs(n_tx), z_rx=zs(n_rx), r0=r0)


def random_model(rng, grid, n_tx=2, n_rx=1, m=3, frequency=FREQ):
    return ReMSModel(
        structure=random_passive_structure(grid, m, rng, frequency),
        tuning=random_tuning(rng, n_tx + n_rx, m),
        frontend=random_frontend(rng, n_tx, n_rx),
    )


def random_pattern(rng, grid):
    vals = rng.standard_normal((grid.size, 2)) + 1j * rng.standard_normal((grid.size, 2))
    return FarFieldPattern(grid, vals)


@pytest.fixture
def criterion_report():
    """Record one acceptance-criterion outcome for the terminal summary."""

    def record(num, ok, detail):
        _ACCEPTANCE.append((int(num), bool(ok), str(detail)))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(_ACCEPTANCE):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num}: {status} - {detail}")
