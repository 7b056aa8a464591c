"""Correlation measures on reduced two-mode (A-C) Gaussian states.

Public single-state functions take :class:`~trimode.symplectic.CovarianceState`
objects in either basis.  The ``*_batch`` helpers work on stacks of
real-basis covariances of shape ``(N, 4, 4)`` ordered ``(x_A, x_C, p_A, p_C)``
and are what the trajectory-level code uses; both paths are checked against
each other in the test-suite.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory
from .errors import (
    NotApplicableError,
    NumericalError,
    ParameterError,
    UnphysicalStateError,
)
from .spectrum import ClosedFormSpectrum, OscillatorParams, Regime, classify_regime
from .symplectic import (
    CovarianceState,
    ModeBasis,
    basis_matrix,
    partial_transpose,
    symplectic_eigenvalues,
    symplectic_form,
)

PHYSICAL_TOL = 1e-6
UNIT_CLAMP = 1e-10
F_DOMAIN_TOL = 1e-8
DISCORD_CLAMP = 1e-9
CONDITIONING_FACTOR = 64.0
# averaged chi_F is rejected when summed fidelity round-off exceeds this
# fraction of the summed second differences
AVERAGE_RESOLUTION = 1e-3

_U2 = basis_matrix(2)
# (x_A, x_C, p_A, p_C) -> (x_A, p_A, x_C, p_C)
_MODEWISE = np.array([0, 2, 1, 3])


class MeasuredMode(str, enum.Enum):
    A = "A"
    C = "C"


# ----------------------------------------------------------------------------
# conversions and two-mode invariants


def real_reduced(stack: np.ndarray) -> np.ndarray:
    """Complex-basis ``(N, 4, 4)`` stack to real basis."""
    out = np.conj(_U2.T) @ stack @ _U2
    return out.real


def _as_real_2mode(state: CovarianceState) -> np.ndarray:
    if state.n_modes != 2:
        raise ParameterError(f"expected a 2-mode reduced state, got {state.n_modes} modes")
    return state.real_matrix()[None]


@dataclass(frozen=True)
class TwoModeInvariants:
    det_a: np.ndarray
    det_c: np.ndarray
    det_off: np.ndarray
    det_sigma: np.ndarray

    @classmethod
    def of(cls, real_stack: np.ndarray) -> TwoModeInvariants:
        m = real_stack[:, _MODEWISE][:, :, _MODEWISE]
        a = m[:, 0:2, 0:2]
        c = m[:, 2:4, 2:4]
        off = m[:, 0:2, 2:4]

        def det2(x: np.ndarray) -> np.ndarray:
            return x[:, 0, 0] * x[:, 1, 1] - x[:, 0, 1] * x[:, 1, 0]

        return cls(det2(a), det2(c), det2(off), np.linalg.det(m))



_PT_SIGNS = np.array([1.0, 1.0, 1.0, -1.0])
_OMEGA_R2 = symplectic_form(2, ModeBasis.REAL)
_OMEGA_R2_PT = _PT_SIGNS[:, None] * _OMEGA_R2 * _PT_SIGNS[None, :]


def _cholesky(real_stack: np.ndarray) -> np.ndarray:
    m = np.asarray(real_stack, dtype=float)
    m = 0.5 * (m + np.swapaxes(m, -1, -2))
    try:
        return np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise UnphysicalStateError("covariance matrix is not positive definite") from None


def _spectrum_from_factor(chol: np.ndarray, omega: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sigma = L L^T, so L^T Omega L is similar to Omega sigma and has
    # singular values nu_-, nu_-, nu_+, nu_+
    k = np.swapaxes(chol, -1, -2) @ omega @ chol
    ev = np.maximum(np.linalg.eigvalsh(np.swapaxes(k, -1, -2) @ k), 0.0)
    return np.sqrt(0.5 * (ev[..., 0] + ev[..., 1])), np.sqrt(0.5 * (ev[..., 2] + ev[..., 3]))


def symplectic_spectrum_batch(
    real_stack: np.ndarray, transposed: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Symplectic eigenvalues ``(nu_minus, nu_plus)`` of a real-basis stack or its PT.

    Eigenvalues of the symmetric matrix ``K^T K`` with ``K = L^T Omega L``.
    Unlike the determinant invariants this has no square-root branch point
    when ``nu_minus ~ nu_plus``, so the spectrum keeps full precision near the
    vacuum.  The partial transpose ``P sigma P`` has Cholesky factor ``P L P``
    and reuses the same factor.
    """
    chol = _cholesky(real_stack)
    return _spectrum_from_factor(chol, _OMEGA_R2_PT if transposed else _OMEGA_R2)


def spectra_with_pt(real_stack: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """``(nu_minus, nu_plus, nu_tilde_minus, nu_tilde_plus)`` from one factorisation."""
    chol = _cholesky(real_stack)
    return (*_spectrum_from_factor(chol, _OMEGA_R2), *_spectrum_from_factor(chol, _OMEGA_R2_PT))


def physical_tolerance(real_stack: np.ndarray, scale: np.ndarray | None = None) -> np.ndarray:
    """Allowed shortfall of the smallest symplectic eigenvalue below 1.

    Determinant invariants of a covariance whose entries were formed from
    terms of size ``s`` carry an absolute error of order ``eps * s^2``;
    strongly squeezed states would otherwise be rejected on round-off alone.
    ``scale`` defaults to the largest entry of each matrix.
    """
    if scale is None:
        scale = np.max(np.abs(real_stack), axis=(-2, -1))
    return PHYSICAL_TOL + CONDITIONING_FACTOR * np.finfo(float).eps * scale**2


def _check_physical(
    nu_minus: np.ndarray, real_stack: np.ndarray | None = None, scale: np.ndarray | None = None
) -> None:
    tol = PHYSICAL_TOL if real_stack is None else physical_tolerance(real_stack, scale)
    short = 1.0 - nu_minus - tol
    if nu_minus.size and np.max(short) > 0:
        k = int(np.argmax(short))
        raise UnphysicalStateError(
            f"symplectic eigenvalue {float(nu_minus.flat[k]):.9g} < 1: covariance is not a physical state"
        )


# ----------------------------------------------------------------------------
# logarithmic negativity


@dataclass(frozen=True)
class PTSpectrum:
    nu_tilde: np.ndarray


def pt_spectrum(sigma_ac: CovarianceState) -> PTSpectrum:
    """Symplectic spectrum of the partial transpose (mode C transposed)."""
    pt = partial_transpose(sigma_ac, 1)
    nu = symplectic_eigenvalues(pt.matrix, symplectic_form(2, pt.basis))
    return PTSpectrum(nu_tilde=nu)


def _neg_log2(nu: np.ndarray) -> np.ndarray:
    nu = np.where(nu >= 1.0 - UNIT_CLAMP, 1.0, nu)
    return -np.log2(nu)


def log_negativity(sigma_ac: CovarianceState) -> float:
    nu = sigma_ac.symplectic_eigenvalues()
    _check_physical(nu, sigma_ac.real_matrix())
    nu_t = pt_spectrum(sigma_ac).nu_tilde
    return float(max(0.0, np.sum(_neg_log2(nu_t[nu_t < 1.0]))))


def log_negativity_batch(
    real_stack: np.ndarray, check: bool = True, scale: np.ndarray | None = None
) -> np.ndarray:
    if check:
        nu_minus, _, nu_t_minus, _ = spectra_with_pt(real_stack)
        _check_physical(nu_minus, real_stack, scale)
    else:
        nu_t_minus, _ = symplectic_spectrum_batch(real_stack, transposed=True)
    e_n = _neg_log2(np.minimum(nu_t_minus, 1.0))
    # drop the sign of -0.0 so emitted values print as 0.0
    return np.where(e_n > 0.0, e_n, 0.0)


# ----------------------------------------------------------------------------
# Gaussian discord


def entropy_function(x: np.ndarray | float) -> np.ndarray:
    """``f(x) = (x+1)/2 log2((x+1)/2) - (x-1)/2 log2((x-1)/2)``, ``f(1) = 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0 - F_DOMAIN_TOL):
        raise UnphysicalStateError(f"entropy function evaluated below 1 (min {x.min():.9g})")
    x = np.maximum(x, 1.0)
    hp = (x + 1.0) / 2.0
    hm = (x - 1.0) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        tail = np.where(hm > 0, hm * np.log2(np.where(hm > 0, hm, 1.0)), 0.0)
    return hp * np.log2(hp) - tail


@dataclass(frozen=True)
class DiscordBlocks:
    """Determinants entering the closed-form minimum.

    ``det_unmeasured`` and ``det_measured`` are the single-mode marginals,
    ``det_offdiag`` the correlation block, ``det_sigma`` the whole state.
    """

    det_unmeasured: np.ndarray
    det_measured: np.ndarray
    det_offdiag: np.ndarray
    det_sigma: np.ndarray


def discord_blocks(real_stack: np.ndarray, measured: MeasuredMode = MeasuredMode.C) -> DiscordBlocks:
    inv = TwoModeInvariants.of(real_stack)
    if MeasuredMode(measured) is MeasuredMode.C:
        return DiscordBlocks(inv.det_a, inv.det_c, inv.det_off, inv.det_sigma)
    return DiscordBlocks(inv.det_c, inv.det_a, inv.det_off, inv.det_sigma)


def min_conditional_determinant(blocks: DiscordBlocks) -> np.ndarray:
    """Infimum of ``det eps`` over Gaussian measurements on the measured mode."""
    a = blocks.det_unmeasured
    b = blocks.det_measured
    c = blocks.det_offdiag
    d = blocks.det_sigma
    bm1 = b - 1.0
    c2 = c * c
    first = (d - a * b) ** 2 <= (1.0 + b) * c2 * (a + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        root1 = np.sqrt(np.maximum(c2 + bm1 * (d - a), 0.0))
        e1 = (np.abs(c) + root1) ** 2 / bm1**2
        root2 = np.sqrt(np.maximum(c2 * c2 + (d - a * b) ** 2 - 2.0 * c2 * (a * b + d), 0.0))
        e2 = (a * b - c2 + d - root2) / (2.0 * b)
    e = np.where(first, e1, e2)
    # a pure measured marginal forces a product state, where eps = sigma_unmeasured
    pure_marginal = bm1 < 1e-12
    return np.where(pure_marginal, a, e)


def discord_batch(
    real_stack: np.ndarray,
    measured: MeasuredMode = MeasuredMode.C,
    check: bool = True,
    scale: np.ndarray | None = None,
) -> np.ndarray:
    nu_m, nu_p = symplectic_spectrum_batch(real_stack)
    if check:
        _check_physical(nu_m, real_stack, scale)
    blocks = discord_blocks(real_stack, measured)
    e_min = min_conditional_determinant(blocks)
    # past the physicality check, sub-unit arguments are round-off
    value = (
        entropy_function(np.sqrt(np.maximum(blocks.det_measured, 1.0)))
        - entropy_function(np.maximum(nu_m, 1.0))
        - entropy_function(np.maximum(nu_p, 1.0))
        + entropy_function(np.sqrt(np.maximum(e_min, 1.0)))
    )
    # a spectrum error d near nu = 1 moves f by about d log(1/d)
    floor = physical_tolerance(real_stack, scale) - PHYSICAL_TOL
    allowed = DISCORD_CLAMP + 4.0 * floor * (1.0 + np.abs(np.log2(np.maximum(floor, 1e-300))))
    if np.any(value < -allowed):
        k = int(np.argmin(value + allowed))
        raise NumericalError(f"negative discord {value[k]:.3e} beyond clamp tolerance {allowed[k]:.1e}")
    return np.where(value > 0.0, value, 0.0)


def gaussian_discord(sigma_ac: CovarianceState, measured_mode: MeasuredMode | str = "C") -> float:
    return float(discord_batch(_as_real_2mode(sigma_ac), MeasuredMode(measured_mode))[0])


# ----------------------------------------------------------------------------
# fidelity


@dataclass(frozen=True)
class FidelityAux:
    v_aux: np.ndarray
    w_aux: np.ndarray
    f_tot: float
    f_tot_w: float
    fidelity: float


def _fidelity_core(v1: np.ndarray, v2: np.ndarray) -> tuple[np.ndarray, ...]:
    """Both F_tot routes for stacks of real-basis ``V = sigma / 2`` matrices."""
    n = v1.shape[-1]
    omega = symplectic_form(n // 2, ModeBasis.REAL)
    eye = np.eye(n)
    vsum = v1 + v2
    det_sum = np.linalg.det(vsum)
    if np.any(det_sum <= 0) or np.any(np.linalg.cond(vsum) > 1e12):
        raise NumericalError(
            f"V1 + V2 is singular (cond = {np.max(np.linalg.cond(vsum)):.3e})"
        )
    v_aux = omega.T @ np.linalg.solve(vsum, omega / 4.0 + v2 @ omega @ v1)
    x = np.linalg.inv(v_aux @ omega)
    mu = np.linalg.eigvals(eye + (x @ x) / 4.0)
    f4_v = 2.0**n * np.prod(np.sqrt(mu.astype(complex)) + 1.0, axis=-1) * np.linalg.det(v_aux)

    w_aux = -2.0 * v_aux @ (1j * omega)
    wi = np.linalg.inv(w_aux)
    mu_w = np.linalg.eigvals(eye - wi @ wi)
    f4_w = (
        np.prod(np.sqrt(mu_w) + 1.0, axis=-1)
        * np.linalg.det(w_aux)
        * np.linalg.det(1j * omega)
    )
    f_v = np.abs(f4_v) ** 0.25 / det_sum**0.25
    f_w = np.abs(f4_w) ** 0.25 / det_sum**0.25
    return v_aux, w_aux, f4_v, f4_w, f_v, f_w, det_sum


def _clamp_unit(f: np.ndarray) -> np.ndarray:
    if np.any(f > 1.0 + 1e-9):
        raise NumericalError(f"fidelity {f.max():.12g} exceeds 1 beyond tolerance")
    return np.clip(f, 0.0, 1.0)


def fidelity_aux(sigma1: CovarianceState, sigma2: CovarianceState) -> FidelityAux:
    """Auxiliary-matrix evaluation of the fidelity, both V and W routes.

    Valid for any mode count.  When a state has a symplectic eigenvalue equal
    to 1 the square roots sit on a branch point and the result carries about
    ``sqrt(eps)`` of round-off; :func:`gaussian_fidelity` avoids this for one
    and two modes.
    """
    if sigma1.n_modes != sigma2.n_modes:
        raise ParameterError("fidelity needs states with the same number of modes")
    v1 = sigma1.real_matrix()[None] / 2.0
    v2 = sigma2.real_matrix()[None] / 2.0
    v_aux, w_aux, f4_v, f4_w, f_v, _f_w, _det_sum = _fidelity_core(v1, v2)
    return FidelityAux(
        v_aux=v_aux[0],
        w_aux=w_aux[0],
        f_tot=float(np.abs(f4_v[0]) ** 0.25),
        f_tot_w=float(np.abs(f4_w[0]) ** 0.25),
        fidelity=float(_clamp_unit(f_v)[0]),
    )


def _check_sum(det_sum: np.ndarray, stack: np.ndarray) -> None:
    if np.any(det_sum <= 0) or not np.all(np.isfinite(det_sum)):
        raise NumericalError(
            f"sigma1 + sigma2 is singular (cond = {np.max(np.linalg.cond(stack)):.3e})"
        )


def fidelity_batch(real1: np.ndarray, real2: np.ndarray) -> np.ndarray:
    """Root fidelity of stacks of real-basis one- or two-mode covariances, in ``[0, 1]``."""
    return _clamp_unit(_fidelity_raw(real1, real2))


def _fidelity_raw(real1: np.ndarray, real2: np.ndarray) -> np.ndarray:
    """Unclamped root fidelity of stacks of real-basis one- or two-mode covariances.

    Uses determinant invariants only.  The purity factors of the two states
    enter as a product, so states with a pure symplectic mode (every A-C
    reduction of a pure three-mode state) keep full precision.  The closing
    ``1 / (x - sqrt(x^2 - d))`` is rationalised to avoid cancellation near
    ``F = 1``.
    """
    real1 = np.asarray(real1, dtype=float)
    real2 = np.asarray(real2, dtype=float)
    if real1.shape != real2.shape:
        raise ParameterError(f"shape mismatch {real1.shape} vs {real2.shape}")
    n = real1.shape[-1]
    total = real1 + real2
    det_sum = np.linalg.det(total)
    _check_sum(det_sum, total)
    # with either state pure F^2 = 4 / sqrt(det_sum) exactly (2 modes; 2 / sqrt
    # for one).  Nearby, F depends on the states through a square root, so
    # round-off in the entries would surface as sqrt(eps) in F.
    pure = _is_pure(real1) | _is_pure(real2)
    if n == 2:
        mixed = (np.linalg.det(real1) - 1.0) * (np.linalg.det(real2) - 1.0)
        root_mixed = np.sqrt(np.maximum(mixed, 0.0))
        f_sq = 2.0 * (np.sqrt(det_sum + root_mixed**2) + root_mixed) / det_sum
        return np.sqrt(np.where(pure, 2.0 / np.sqrt(det_sum), f_sq))
    if n != 4:
        raise ParameterError("fidelity_batch handles one- or two-mode states")
    # x^2 - det_sum is of order (impurity1 * impurity2)^2 while both terms are
    # O(1), so the invariants are formed in extended precision
    r1 = real1.astype(np.longdouble)
    r2 = real2.astype(np.longdouble)
    omega = symplectic_form(2, ModeBasis.REAL).astype(np.longdouble)
    d_sum = _det4(r1 + r2)
    gamma = _det4(omega @ r1 @ omega @ r2 - np.eye(4, dtype=np.longdouble))
    lam = _impurity(r1) * _impurity(r2)
    root_g = np.sqrt(np.maximum(gamma, 0.0))
    root_d = np.sqrt(d_sum)
    # x - sqrt(det_sum), without subtracting the two O(1) roots
    gap = (gamma - d_sum) / (root_g + root_d) + np.sqrt(np.maximum(lam, 0.0))
    x = root_d + gap
    q = np.maximum(gap * (x + root_d), 0.0)
    f_sq = (4.0 * (x + np.sqrt(q)) / d_sum).astype(float)
    return np.sqrt(np.where(pure, 4.0 / np.sqrt(det_sum), f_sq))


def _impurity(m: np.ndarray) -> np.ndarray:
    """``det(sigma + i Omega) = (nu_-^2 - 1)(nu_+^2 - 1)`` of a real-basis stack."""
    w = m[..., _MODEWISE, :][..., :, _MODEWISE]

    def det2(i: int, j: int) -> np.ndarray:
        return w[..., i, j] * w[..., i + 1, j + 1] - w[..., i, j + 1] * w[..., i + 1, j]

    return _det4(m) - (det2(0, 0) + det2(2, 2) + 2.0 * det2(0, 2)) + 1.0


_PAIRS = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def _det4(m: np.ndarray) -> np.ndarray:
    """4x4 determinant by Laplace expansion along the first two rows; keeps the dtype."""

    def minor(r: int, a: int, b: int) -> np.ndarray:
        return m[..., r, a] * m[..., r + 1, b] - m[..., r, b] * m[..., r + 1, a]

    top = {p: minor(0, *p) for p in _PAIRS}
    bottom = {p: minor(2, *p) for p in _PAIRS}
    return (
        top[(0, 1)] * bottom[(2, 3)]
        - top[(0, 2)] * bottom[(1, 3)]
        + top[(0, 3)] * bottom[(1, 2)]
        + top[(1, 2)] * bottom[(0, 3)]
        - top[(1, 3)] * bottom[(0, 2)]
        + top[(2, 3)] * bottom[(0, 1)]
    )


def _is_pure(real_stack: np.ndarray) -> np.ndarray:
    """All symplectic eigenvalues equal 1 up to the round-off of the entries."""
    tol = CONDITIONING_FACTOR * np.finfo(float).eps * np.max(np.abs(real_stack), axis=(-2, -1))
    if real_stack.shape[-1] == 2:
        nu = np.sqrt(np.abs(np.linalg.det(real_stack)))
    else:
        nu = symplectic_spectrum_batch(real_stack)[1]
    return nu - 1.0 <= tol


def gaussian_fidelity(sigma1: CovarianceState, sigma2: CovarianceState) -> float:
    """Uhlmann root fidelity ``Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))`` of zero-mean states."""
    if sigma1.n_modes != sigma2.n_modes:
        raise ParameterError("fidelity needs states with the same number of modes")
    if sigma1.n_modes > 2:
        return fidelity_aux(sigma1, sigma2).fidelity
    return float(fidelity_batch(sigma1.real_matrix()[None], sigma2.real_matrix()[None])[0])


# ----------------------------------------------------------------------------
# dynamical fidelity susceptibility


def default_delta_t(spec: ClosedFormSpectrum) -> float:
    return 1e-3 * 2.0 * math.pi / spec.k_max


@dataclass(frozen=True)
class SusceptibilitySamples:
    chi: np.ndarray
    # |F(sigma, sigma) - 1| per sample, the round-off probe
    noise: np.ndarray
    second: np.ndarray
    # False where the state did not change over delta_t beyond rounding
    moving: np.ndarray

    def check_average(self) -> None:
        total = float(np.sum(np.abs(self.second[self.moving])))
        noise = float(np.sum(self.noise[self.moving]))
        if noise > AVERAGE_RESOLUTION * total:
            raise NumericalError(
                f"averaged fidelity susceptibility unresolved: summed fidelity round-off "
                f"{noise:.1e} against summed second difference {total:.1e}"
            )


def susceptibility_batch(trajectory: Trajectory, times: np.ndarray, delta_t: float) -> np.ndarray:
    return susceptibility_samples(trajectory, times, delta_t).chi


def susceptibility_samples(
    trajectory: Trajectory, times: np.ndarray, delta_t: float
) -> SusceptibilitySamples:
    """``chi_F = [2 - F(t, t+dt) - F(t, t-dt)] / (2 dt^2)`` at every time.

    This is the symmetric second difference of ``F`` estimating
    ``-1/2 d^2F/d(dt)^2``.  Neighbouring states are evaluated exactly, never
    interpolated.

    Raises
    ------
    NumericalError
        If at some sample the second difference does not exceed the fidelity
        round-off floor, probed by ``|F(sigma, sigma) - 1|``, or if the state
        moved over ``delta_t`` while ``F`` stayed at 1 to rounding.  The fidelity
        depends on square roots of the states' impurities, so near-pure,
        strongly squeezed states can push this floor to 1e-6.
    """
    if not delta_t > 0:
        raise ParameterError(f"delta_t must be > 0, got {delta_t!r}")
    times = np.asarray(times, dtype=float)
    ref = real_reduced(trajectory.reduced_at(times))
    fwd = real_reduced(trajectory.reduced_at(times + delta_t))
    bwd = real_reduced(trajectory.reduced_at(times - delta_t))
    f_p = _fidelity_raw(ref, fwd)
    f_m = _fidelity_raw(ref, bwd)
    second = 2.0 - f_p - f_m
    noise = np.abs(_fidelity_raw(ref, ref) - 1.0)
    eps = np.finfo(float).eps
    scale = np.max(np.abs(ref), axis=(-2, -1))
    moved = np.maximum(
        np.max(np.abs(fwd - ref), axis=(-2, -1)), np.max(np.abs(bwd - ref), axis=(-2, -1))
    ) / scale
    # a state unchanged to rounding over delta_t is stationary there and has chi = 0
    moving = moved > 64.0 * eps
    # noise at the ulp level means F itself is exact
    unresolved = moving & (noise >= np.abs(second)) & (noise > 4.0 * eps)
    # a state that visibly moved but left F at 1 means delta_t is below resolution
    unresolved |= moving & (np.abs(second) <= 64.0 * eps)
    if np.any(unresolved):
        k = int(np.argmax(unresolved))
        raise NumericalError(
            f"fidelity susceptibility unresolved at {int(unresolved.sum())} of {len(times)} "
            f"samples (t = {times[k]:.6g}: fidelity round-off {noise[k]:.1e} against second "
            f"difference {second[k]:.1e}); increase delta_t"
        )
    chi = np.where(moving, second / (2.0 * delta_t**2), 0.0)
    # F(t, t) = 1 is used exactly, so only round-off can push chi below zero
    floor = 2.0 * (noise + 2.0 * eps) / (2.0 * delta_t**2)
    if np.any(chi < -np.maximum(floor, DISCORD_CLAMP)):
        raise NumericalError(f"negative susceptibility {chi.min():.3e}")
    chi = np.where(chi > 0.0, chi, 0.0)
    return SusceptibilitySamples(chi=chi, noise=noise, second=second, moving=moving)


def dynamical_fidelity_susceptibility(
    trajectory: Trajectory, t: float, delta_t: float | None = None
) -> float:
    if delta_t is None:
        delta_t = default_delta_t(trajectory.model.spectrum)
    return float(susceptibility_batch(trajectory, np.array([t]), delta_t)[0])


# ----------------------------------------------------------------------------
# time averages


def default_window(spec: ClosedFormSpectrum, periods: float = 50.0) -> float:
    """Averaging window covering ``periods`` cycles of the slowest nonzero mode."""
    return periods * 2.0 * math.pi / spec.k_min_positive


def required_samples(window: float, k_max: float, per_period: int = 20) -> int:
    return int(math.ceil(per_period * window * k_max / (2.0 * math.pi)))


def default_samples(window: float, spec: ClosedFormSpectrum, minimum: int = 2**12) -> int:
    return max(minimum, required_samples(window, spec.k_max))


def averaging_grid(window: float, n_samples: int) -> np.ndarray:
    """Uniform grid on ``[0, window)``; the open end keeps periodic means unbiased."""
    return np.linspace(0.0, window, n_samples, endpoint=False)


def check_averaging_grid(times: np.ndarray, spec: ClosedFormSpectrum, min_periods: float = 10.0) -> None:
    window = float(times[-1] - times[0] + (times[1] - times[0])) if len(times) > 1 else 0.0
    slow = 2.0 * math.pi / spec.k_min_positive
    if window < min_periods * slow:
        raise ParameterError(
            f"averaging window {window:.6g} shorter than {min_periods:g} periods of the "
            f"slowest mode (need >= {min_periods * slow:.6g})"
        )
    need = required_samples(window, spec.k_max)
    if len(times) < need:
        raise ParameterError(
            f"{len(times)} samples undersample the fastest mode; need >= {need}"
        )


def time_average(
    values: Iterable[float],
    times: np.ndarray | None = None,
    spectrum: ClosedFormSpectrum | None = None,
) -> float:
    """Arithmetic mean of uniformly sampled values.

    With ``times`` and ``spectrum`` given, the window and sampling density are
    validated first.
    """
    arr = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
    if arr.size == 0:
        raise ParameterError("cannot average an empty series")
    if spectrum is not None:
        if times is None:
            raise ParameterError("window validation needs the sample times")
        check_averaging_grid(np.asarray(times, dtype=float), spectrum)
    return float(np.mean(arr))


# ----------------------------------------------------------------------------
# analytic predictions


@dataclass(frozen=True)
class WeakCouplingPrediction:
    lambda_p: float
    g: float
    e_n_avg: float

    @property
    def beat_period(self) -> float:
        """Period of ``|sin(2 sqrt(2) g t)|``."""
        return weak_coupling_beat_period(self.g)

    def _beat(self, t: np.ndarray | float) -> np.ndarray:
        return np.abs(np.sin(2.0 * math.sqrt(2.0) * self.g * np.asarray(t, dtype=float)))

    def e_n_of_t(self, t: np.ndarray | float) -> np.ndarray:
        return self.lambda_p * self._beat(t) / (2.0 * math.log(2.0))

    def pt_eigenvalues(self, t: np.ndarray | float) -> tuple[np.ndarray, np.ndarray]:
        """Leading-order PT symplectic eigenvalues ``sqrt(1 -+ lambda_p |sin|)``, smaller first."""
        s = self.lambda_p * self._beat(t)
        return np.sqrt(1.0 - s), np.sqrt(1.0 + s)


def weak_coupling_beat_period(g: float) -> float:
    if g <= 0:
        return math.inf
    return math.pi / (2.0 * math.sqrt(2.0) * g)


def weak_coupling_prediction(p: OscillatorParams, max_lambda_p: float = 0.05) -> WeakCouplingPrediction:
    symmetric = (
        p.omega_a == p.omega_b and p.lambda_a == 0 and p.lambda_b == 0 and p.g_a == p.g_b
    )
    if not symmetric:
        raise NotApplicableError(
            "weak-coupling law needs omega_a == omega_b, lambda = 0 and g_a == g_b"
        )
    lam = math.sqrt(2.0) * p.g_a / p.omega_a
    if not lam < max_lambda_p:
        raise NotApplicableError(f"lambda_p = {lam:.4g} is not in the weak-coupling range")
    return WeakCouplingPrediction(lambda_p=lam, g=p.g_a, e_n_avg=lam / (math.pi * math.log(2.0)))


def hmr_pt_eigenvalues(p: OscillatorParams, t: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form PT symplectic eigenvalues at the heavy-mediator point."""
    if classify_regime(p) is not Regime.EXACT_HMR:
        raise NotApplicableError("hmr_pt_eigenvalues requires omega_b == lambda_b")
    t = np.asarray(t, dtype=float)
    wa, la = p.omega_a, p.lambda_a
    k1 = math.sqrt(wa**2 - la**2)
    g2 = p.g_a**2 + p.g_b**2
    num = 16.0 * np.sin(0.5 * k1 * t) ** 2 * (np.cos(k1 * t) * la + wa) * g2
    nu2 = np.sqrt(1.0 + num / ((wa - la) * (wa + la) ** 2))
    return np.ones_like(nu2), nu2


# ----------------------------------------------------------------------------
# series


QUANTITIES = ("e_n", "discord", "fidelity", "chi_f")


@dataclass(frozen=True)
class MeasureSeries:
    times: np.ndarray
    e_n: np.ndarray | None = None
    discord: np.ndarray | None = None
    fidelity: np.ndarray | None = None
    chi_f: np.ndarray | None = None
    averages: dict[str, float] = field(default_factory=dict)


def measure_series(
    trajectory: Trajectory,
    quantities: Iterable[str] = ("e_n", "discord", "chi_f"),
    delta_t: float | None = None,
    measured_mode: MeasuredMode | str = MeasuredMode.C,
    validate_window: bool = False,
) -> MeasureSeries:
    """Evaluate the requested measures along a trajectory and average them.

    ``fidelity`` is the overlap ``F(sigma_AC(0), sigma_AC(t))`` with the
    initial reduced state.
    """
    wanted = list(dict.fromkeys(quantities))
    unknown = set(wanted) - set(QUANTITIES)
    if unknown:
        raise ParameterError(f"unknown quantities {sorted(unknown)}")
    times = trajectory.times
    if validate_window:
        check_averaging_grid(times, trajectory.model.spectrum)
    real = real_reduced(trajectory.reduced)
    out: dict[str, np.ndarray] = {}
    if "e_n" in wanted:
        out["e_n"] = log_negativity_batch(real, scale=trajectory.scale)
    if "discord" in wanted:
        out["discord"] = discord_batch(real, MeasuredMode(measured_mode), scale=trajectory.scale)
    if "fidelity" in wanted:
        ref = np.broadcast_to(real_reduced(trajectory.reduced_at(np.array([0.0]))), real.shape)
        out["fidelity"] = fidelity_batch(ref, real)
    if "chi_f" in wanted:
        if delta_t is None:
            delta_t = default_delta_t(trajectory.model.spectrum)
        samples = susceptibility_samples(trajectory, times, delta_t)
        samples.check_average()
        out["chi_f"] = samples.chi
    averages = {name: float(np.mean(values)) for name, values in out.items()}
    return MeasureSeries(times=times, averages=averages, **out)
