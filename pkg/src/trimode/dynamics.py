"""Initial states and closed-form time evolution of the covariance matrix.

Every time point is evaluated directly from the closed-form propagator
``S(t) = [[A, B], [B*, A*]]``; there is no time stepping, so trajectories
carry no accumulated error and grid points are independent of each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BasisError, ParameterError
from .spectrum import (
    BogoliubovMatrices,
    ClosedFormSpectrum,
    OscillatorParams,
    bogoliubov,
    closed_form_spectrum,
)
from .symplectic import CovarianceState, ModeBasis

# complex-basis rows of (a, c, a^dag, c^dag) inside the 3-mode layout
AC_INDICES = (0, 2, 3, 5)


@dataclass(frozen=True)
class SqueezeSpec:
    """Single-mode squeezing ``zeta_j = r_j exp(i theta_j)`` for A, B, C."""

    r: tuple[float, float, float] = (0.0, 0.0, 0.0)
    theta: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        r = tuple(float(x) for x in self.r)
        theta = tuple(float(x) % (2.0 * math.pi) for x in self.theta)
        if len(r) != 3 or len(theta) != 3:
            raise ParameterError("squeeze spec needs exactly three r and three theta values")
        if not all(math.isfinite(x) and x >= 0 for x in r):
            raise ParameterError(f"squeezing strengths must be finite and >= 0, got {r}")
        if not all(math.isfinite(x) for x in theta):
            raise ParameterError(f"squeezing angles must be finite, got {theta}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "theta", theta)

    @property
    def is_vacuum(self) -> bool:
        return all(x == 0 for x in self.r)


def initial_covariance(sq: SqueezeSpec) -> CovarianceState:
    """Product of single-mode squeezed vacua, complex basis."""
    r = np.asarray(sq.r)
    theta = np.asarray(sq.theta)
    u0 = np.diag(np.cosh(2 * r)).astype(complex)
    v0 = np.diag(-np.exp(1j * theta) * np.sinh(2 * r))
    return CovarianceState(np.block([[u0, v0], [v0.conj(), u0.conj()]]), ModeBasis.COMPLEX)


@dataclass(frozen=True)
class PropagatorBlocks:
    a: np.ndarray
    b: np.ndarray
    t: float

    @property
    def matrix(self) -> np.ndarray:
        return np.block([[self.a, self.b], [self.b.conj(), self.a.conj()]])

    def structure_residual(self) -> float:
        """Deviation from ``A^T = A`` and ``B^dag = -B``."""
        return float(
            max(np.max(np.abs(self.a - self.a.T)), np.max(np.abs(self.b + self.b.conj().T)))
        )


def _block_stack(
    bog: BogoliubovMatrices, k: np.ndarray, times: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    al, be = bog.alpha, bog.beta
    em = np.exp(-1j * np.outer(times, k))
    ep = np.conj(em)
    a = np.einsum("mi,nm,mj->nij", al, em, al) - np.einsum("mi,nm,mj->nij", be, ep, be)
    b = np.einsum("mi,nm,mj->nij", al, em, be) - np.einsum("mi,nm,mj->nij", be, ep, al)
    if bog.frozen_curvature:
        drift = -1j * bog.frozen_curvature * times
        a[:, 1, 1] += drift
        b[:, 1, 1] += drift
    return a, b


def propagator_blocks(
    bog: BogoliubovMatrices, spec: ClosedFormSpectrum, t: float
) -> PropagatorBlocks:
    """Blocks ``A(t)``, ``B(t)`` of the symplectic propagator."""
    a, b = _block_stack(bog, _frequencies(bog, spec), np.array([float(t)]))
    return PropagatorBlocks(a=a[0], b=b[0], t=float(t))


def _frequencies(bog: BogoliubovMatrices, spec: ClosedFormSpectrum | None) -> np.ndarray:
    # the HMR branch pins k2 = 0 even when the spectrum carries round-off
    if spec is not None and bog.k_tilde.shape != spec.k_tilde.shape:
        raise ParameterError("spectrum and Bogoliubov matrices disagree in size")
    return bog.k_tilde


def propagator_stack(
    bog: BogoliubovMatrices, spec: ClosedFormSpectrum, times: np.ndarray
) -> np.ndarray:
    """``S(t)`` for every entry of ``times``, shape ``(N, 6, 6)``."""
    times = np.asarray(times, dtype=float)
    a, b = _block_stack(bog, _frequencies(bog, spec), times)
    top = np.concatenate([a, b], axis=2)
    bottom = np.concatenate([b.conj(), a.conj()], axis=2)
    return np.concatenate([top, bottom], axis=1)


def evolve_covariance(sigma0: CovarianceState, blocks: PropagatorBlocks) -> CovarianceState:
    """Evolve a complex-basis covariance with the block update rule."""
    if sigma0.basis is not ModeBasis.COMPLEX:
        raise BasisError("evolve_covariance expects a complex-basis covariance")
    if sigma0.n_modes != 3:
        raise ParameterError("evolve_covariance expects a 3-mode covariance")
    m = sigma0.matrix
    u0, v0 = m[:3, :3], m[:3, 3:]
    a, b = blocks.a, blocks.b
    ac, bc = a.conj(), b.conj()
    u = a @ u0 @ ac + b @ v0.conj() @ ac - b @ u0.conj() @ b - a @ v0 @ b
    v = a @ v0 @ a + b @ u0.conj() @ a - a @ u0 @ bc - b @ v0.conj() @ bc
    return CovarianceState(np.block([[u, v], [v.conj(), u.conj()]]), ModeBasis.COMPLEX)


@dataclass(frozen=True)
class Model:
    """Parameters, closed-form spectrum and Bogoliubov matrices, bundled."""

    params: OscillatorParams
    spectrum: ClosedFormSpectrum
    bogoliubov: BogoliubovMatrices

    @classmethod
    def from_params(cls, p: OscillatorParams) -> Model:
        spec = closed_form_spectrum(p)
        return cls(p, spec, bogoliubov(p, spec))

    def propagators(self, times: np.ndarray) -> np.ndarray:
        return propagator_stack(self.bogoliubov, self.spectrum, times)

    def evolve(self, sigma0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """Full covariances ``S sigma0 S^dag``, shape ``(N, 6, 6)``."""
        s = self.propagators(times)
        return s @ sigma0 @ np.conj(np.swapaxes(s, 1, 2))

    def evolve_reduced(self, sigma0: np.ndarray, times: np.ndarray) -> np.ndarray:
        """A-C reduced covariances, complex basis, shape ``(N, 4, 4)``."""
        s = self.propagators(times)[:, AC_INDICES, :]
        return s @ sigma0 @ np.conj(np.swapaxes(s, 1, 2))


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    full: np.ndarray
    reduced: np.ndarray
    model: Model = field(compare=False)
    sigma0: CovarianceState = field(compare=False)
    # size of the intermediate products in S sigma0 S^dag, per time; sets
    # the round-off floor of anything computed from the evolved entries
    scale: np.ndarray | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def states(self) -> list[CovarianceState]:
        return [CovarianceState(m) for m in self.full]

    @property
    def reduced_states(self) -> list[CovarianceState]:
        return [CovarianceState(m) for m in self.reduced]

    def reduced_at(self, times: np.ndarray) -> np.ndarray:
        """Reduced covariances at arbitrary times, computed exactly."""
        return self.model.evolve_reduced(self.sigma0.matrix, np.asarray(times, dtype=float))


def check_time_grid(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ParameterError("time grid must be a non-empty 1-D array")
    if times[0] != 0.0:
        raise ParameterError(f"time grid must start at 0, got {times[0]!r}")
    if np.any(np.diff(times) <= 0):
        raise ParameterError("time grid must be strictly increasing")
    return times


def evolve_trajectory(
    p: OscillatorParams | Model,
    sq: SqueezeSpec,
    time_grid: np.ndarray,
    with_full: bool = True,
) -> Trajectory:
    times = check_time_grid(time_grid)
    model = p if isinstance(p, Model) else Model.from_params(p)
    sigma0 = initial_covariance(sq)
    s = model.propagators(times)
    s_dag = np.conj(np.swapaxes(s, 1, 2))
    if with_full:
        full = s @ sigma0.matrix @ s_dag
        reduced = full[:, AC_INDICES][:, :, AC_INDICES]
    else:
        full = np.empty((0, 6, 6), dtype=complex)
        sr = s[:, AC_INDICES, :]
        reduced = sr @ sigma0.matrix @ np.conj(np.swapaxes(sr, 1, 2))
    scale = np.max(np.abs(s), axis=(1, 2)) ** 2 * np.max(np.abs(sigma0.matrix))
    return Trajectory(
        times=times, full=full, reduced=reduced, model=model, sigma0=sigma0, scale=scale
    )
