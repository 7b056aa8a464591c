import numpy as np
import pytest

from trimode.measures import MeasuredMode, discord_blocks, min_conditional_determinant
from trimode.oracles import (
    _MODEWISE,
    brute_force_min_determinant,
    conditional_determinant,
)
from trimode.symplectic import random_physical_state


def direct_conditional(m: np.ndarray, measured: MeasuredMode, log_s: float, phi: float) -> float:
    """Schur complement with an explicit seed, no rearrangement."""
    mw = m[_MODEWISE][:, _MODEWISE]
    a, c, off = mw[0:2, 0:2], mw[2:4, 2:4], mw[0:2, 2:4]
    if measured is MeasuredMode.A:
        a, c, off = c, a, off.T
    rot = np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])
    seed = rot @ np.diag([np.exp(log_s), np.exp(-log_s)]) @ rot.T
    return float(np.linalg.det(a - off @ np.linalg.inv(c + seed) @ off.T))


@pytest.mark.parametrize("mode", list(MeasuredMode))
def test_conditional_determinant_matches_direct(rng, mode):
    for _ in range(10):
        m = random_physical_state(2, rng, scale=0.6).matrix.real
        log_s, phi = rng.uniform(-2, 2), rng.uniform(0, np.pi)
        assert conditional_determinant(m, mode, log_s, phi) == pytest.approx(
            direct_conditional(m, mode, log_s, phi), rel=1e-10
        )


def test_conditional_determinant_survives_extreme_squeezing(rng):
    m = random_physical_state(2, rng, scale=0.6).matrix.real
    val = float(conditional_determinant(m, MeasuredMode.C, 250.0, 0.3))
    assert np.isfinite(val) and val > 0


@pytest.mark.parametrize("mode", list(MeasuredMode))
def test_brute_force_agrees_with_closed_form(rng, mode):
    for _ in range(8):
        m = random_physical_state(2, rng, scale=0.6, max_thermal=2.0).matrix.real
        closed = float(min_conditional_determinant(discord_blocks(m[None], mode))[0])
        search = brute_force_min_determinant(m, mode)
        assert search.e_min == pytest.approx(closed, abs=1e-4)
        # the closed form is the infimum
        assert search.e_min >= closed - 1e-6
        assert search.e_min <= search.grid_e_min


def test_product_state_unaffected_by_measurement():
    m = np.diag([2.0, 3.0, 1.5, 0.5])
    search = brute_force_min_determinant(m, "C")
    assert search.e_min == pytest.approx(2.0 * 1.5, rel=1e-12)


def test_pure_state_collapses_to_pure():
    c, s = np.cosh(1.0), np.sinh(1.0)
    tmsv = np.array([[c, s, 0, 0], [s, c, 0, 0], [0, 0, c, -s], [0, 0, -s, c]])
    assert brute_force_min_determinant(tmsv).e_min == pytest.approx(1.0, abs=1e-8)
