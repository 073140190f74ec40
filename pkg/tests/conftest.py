import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nsc.spectral_core import Grid3, PhysicalField, forward_transform, leray_project

settings.register_profile(
    "nsc", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("nsc")


def random_field(grid, seed, band=None, project=True):
    """Real, mean-zero random vector field; optionally band-limited and projected."""
    rng = np.random.default_rng(seed)
    u = forward_transform(PhysicalField(grid, rng.standard_normal((3,) + grid.shape)))
    u.coeffs[:, 0, 0, 0] = 0.0
    if band is not None:
        lo, hi = band
        xa = grid.xi_abs
        u.coeffs *= (xa >= lo) & (xa <= hi)
    return leray_project(u) if project else u


@pytest.fixture(scope="session")
def grid16():
    return Grid3(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid3(32)


@pytest.fixture
def rfield():
    return random_field


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion, repeated at the end
# ---------------------------------------------------------------------------
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report(capsys):
    def report(n: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
