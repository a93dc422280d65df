import math

import pytest

from cavitycat.hamiltonians import detuning_for_ratio, params_from_effective

G_EFF = 2 * math.pi * 1.0e5  # g sqrt(N) = 2 pi x 100 kHz
N_ATOMS = 10_000

ACCEPTANCE_LINES = []


def params_at_ratio(ratio, alpha=2.0, N=N_ATOMS, g_eff=G_EFF):
    """Model with ``4 g^2 N |alpha|^2 / Delta^2 = ratio`` at fixed ``g sqrt(N)``."""
    delta = detuning_for_ratio(g_eff, max(abs(alpha) ** 2, 1.0), ratio)
    return params_from_effective(delta, g_eff / math.sqrt(N), N)


@pytest.fixture
def record_criterion():
    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'} | {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
