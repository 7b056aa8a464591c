"""Brute-force references for closed-form results.

These are deliberately slow and assumption-light; they exist so the closed
forms in :mod:`trimode.measures` can be checked against an independent path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .measures import _MODEWISE, MeasuredMode

LOG_S_RANGE = (-3.0 * np.log(10.0), 3.0 * np.log(10.0))
N_SQUEEZE = 128
N_ANGLE = 64
# far beyond the homodyne limit, short of overflow
LOG_S_CLAMP = 300.0


@dataclass(frozen=True)
class DiscordSearch:
    e_min: float
    log_s: float
    phi: float
    grid_e_min: float


def _blocks(real_2mode: np.ndarray, measured: MeasuredMode) -> tuple[np.ndarray, ...]:
    m = real_2mode[_MODEWISE][:, _MODEWISE]
    a, c, off = m[0:2, 0:2], m[2:4, 2:4], m[0:2, 2:4]
    if MeasuredMode(measured) is MeasuredMode.C:
        return a, c, off
    return c, a, off.T


def _adj(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def conditional_determinant(real_2mode: np.ndarray, measured: MeasuredMode, log_s, phi) -> np.ndarray:
    """``det(sigma_u - C (sigma_m + sigma_0)^-1 C^T)`` for pure Gaussian seeds.

    The seed is ``s v v^T + w w^T / s`` with ``v = (cos phi, sin phi)`` and
    ``w`` orthogonal to it.  Writing the 2x2 inverse through the adjugate,
    which is linear in the seed, keeps every term O(1) relative to its
    neighbours, so extreme squeezing (the homodyne limit) stays accurate.
    """
    unmeasured, meas, off = _blocks(real_2mode, measured)
    log_s = np.asarray(log_s, dtype=float)
    phi = np.asarray(phi, dtype=float)
    s, inv_s = np.exp(log_s), np.exp(-log_s)
    v = np.stack([np.cos(phi), np.sin(phi)], -1)
    w = np.stack([-np.sin(phi), np.cos(phi)], -1)
    # adj(seed) swaps the roles of v and w
    det_total = (
        np.linalg.det(meas)
        + 1.0
        + s * np.einsum("...i,ij,...j->...", w, meas, w)
        + inv_s * np.einsum("...i,ij,...j->...", v, meas, v)
    )
    cw = w @ off.T
    cv = v @ off.T
    adj_term = (
        off @ _adj(meas) @ off.T
        + s[..., None, None] * cw[..., :, None] * cw[..., None, :]
        + inv_s[..., None, None] * cv[..., :, None] * cv[..., None, :]
    )
    eps = unmeasured - adj_term / det_total[..., None, None]
    return eps[..., 0, 0] * eps[..., 1, 1] - eps[..., 0, 1] * eps[..., 1, 0]


def brute_force_min_determinant(
    real_2mode: np.ndarray, measured: MeasuredMode | str = MeasuredMode.C
) -> DiscordSearch:
    """Grid search over squeezing and angle followed by Nelder-Mead refinement.

    Ties on the grid resolve to the lowest flat index, so the result does not
    depend on evaluation order.
    """
    measured = MeasuredMode(measured)
    ls = np.linspace(*LOG_S_RANGE, N_SQUEEZE)
    ph = np.linspace(0.0, np.pi, N_ANGLE, endpoint=False)
    grid_s, grid_p = np.meshgrid(ls, ph, indexing="ij")
    values = conditional_determinant(real_2mode, measured, grid_s, grid_p)
    flat = int(np.argmin(values))
    start = np.array([grid_s.flat[flat], grid_p.flat[flat]])

    def objective(x: np.ndarray) -> float:
        log_s = float(np.clip(x[0], -LOG_S_CLAMP, LOG_S_CLAMP))
        return float(conditional_determinant(real_2mode, measured, log_s, x[1]))

    res = scipy.optimize.minimize(
        objective, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000}
    )
    best = min(float(res.fun), float(values.flat[flat]))
    return DiscordSearch(e_min=best, log_s=float(res.x[0]), phi=float(res.x[1]), grid_e_min=float(values.flat[flat]))
