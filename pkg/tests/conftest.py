import numpy as np
import pytest

from hypstrip.grid import Field, StripGrid


@pytest.fixture
def report(capsys):
    """Print one PASS/FAIL line straight to the terminal (bypassing capture)."""

    def _report(label, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        return ok

    return _report


@pytest.fixture(scope="session")
def small_grid():
    return StripGrid(8, 8, 17)


@pytest.fixture(scope="session")
def grid16():
    return StripGrid(16, 16, 33)


def mode_field(grid, n1, n2, profile, comp=None, ncomp=2):
    """Real field a(y) cos-type single mode: coefficient 1/2 at (n1,n2) and its mirror."""
    c = np.zeros((ncomp,) + grid.shape if comp is not None else grid.shape, dtype=complex)
    i1, i2 = n1 % grid.N1, n2 % grid.N2
    j1, j2 = (-n1) % grid.N1, (-n2) % grid.N2
    tgt = c[comp] if comp is not None else c
    tgt[i1, i2] += 0.5 * profile
    tgt[j1, j2] += 0.5 * profile
    return Field(grid, c, hermitian=True, dirichlet=True)
