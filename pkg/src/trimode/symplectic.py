"""Symplectic structure and generic covariance-matrix operations.

Conventions
-----------
Complex basis orders the mode operators as ``(a_1..a_n, a_1^dag..a_n^dag)``;
real basis as ``(x_1..x_n, p_1..p_n)`` with ``a = (x + i p)/sqrt(2)``.
Covariance matrices hold symmetrized second moments
``sigma_ij = <{X_i, X_j^dag}>`` so the vacuum is the identity in both bases
(hbar = 1).  First moments are identically zero for every state in this
package and are not represented.

The helpers here also provide the brute-force references (direct
diagonalisation of ``i Omega M``, ``expm(Omega H t)``) that the closed-form
paths in :mod:`trimode.spectrum` and :mod:`trimode.dynamics` are checked
against.
"""

from __future__ import annotations

import enum
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import BasisError, NumericalError, ParameterError


class ModeBasis(str, enum.Enum):
    COMPLEX = "complex"
    REAL = "real"


def symplectic_form(n_modes: int, basis: ModeBasis = ModeBasis.COMPLEX) -> np.ndarray:
    """Return the ``2n x 2n`` symplectic form in the requested basis.

    Complex basis: ``-i diag(1, .., 1, -1, .., -1)``.
    Real basis: ``[[0, I], [-I, 0]]``.
    """
    if n_modes < 1:
        raise ParameterError(f"n_modes must be positive, got {n_modes}")
    basis = ModeBasis(basis)
    if basis is ModeBasis.COMPLEX:
        signs = np.concatenate([np.ones(n_modes), -np.ones(n_modes)])
        return -1j * np.diag(signs)
    eye = np.eye(n_modes)
    zero = np.zeros((n_modes, n_modes))
    return np.block([[zero, eye], [-eye, zero]])


def basis_matrix(n_modes: int) -> np.ndarray:
    """Unitary mapping real-basis operator vectors to complex-basis ones."""
    eye = np.eye(n_modes)
    return np.block([[eye, 1j * eye], [eye, -1j * eye]]) / np.sqrt(2.0)


@dataclass(frozen=True)
class CovarianceState:
    """Zero-mean Gaussian state, stored as its covariance matrix.

    The matrix is copied and frozen on construction.  Hermiticity and
    physicality are *not* enforced eagerly; see
    :meth:`hermiticity_residual` and :func:`symplectic_eigenvalues`.
    """

    matrix: np.ndarray
    basis: ModeBasis = ModeBasis.COMPLEX

    def __post_init__(self) -> None:
        arr = np.array(self.matrix, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] % 2:
            raise ParameterError(
                f"covariance matrix must be square with even size, got shape {arr.shape}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)
        object.__setattr__(self, "basis", ModeBasis(self.basis))

    @property
    def n_modes(self) -> int:
        return self.matrix.shape[0] // 2

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def to(self, basis: ModeBasis) -> CovarianceState:
        return basis_change(self, basis)

    def real_matrix(self) -> np.ndarray:
        """Real-basis covariance as a float array."""
        return basis_change(self, ModeBasis.REAL).matrix.real.copy()

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(
            self.matrix, symplectic_form(self.n_modes, self.basis)
        )


def _require_same_basis(a: CovarianceState, b: CovarianceState) -> None:
    if a.basis is not b.basis:
        raise BasisError(f"mixed-basis operation: {a.basis.value} vs {b.basis.value}")


def basis_change(state: CovarianceState, target: ModeBasis) -> CovarianceState:
    """Re-express ``state`` in ``target`` basis (``U sigma U^dag`` or its inverse)."""
    target = ModeBasis(target)
    if state.basis is target:
        return state
    u = basis_matrix(state.n_modes)
    if target is ModeBasis.COMPLEX:
        out = u @ state.matrix @ u.conj().T
    else:
        out = u.conj().T @ state.matrix @ u
    return CovarianceState(out, target)


def _mode_indices(n_modes: int, modes: Sequence[int]) -> list[int]:
    # identical layout in both bases: mode j occupies rows j and n + j
    for m in modes:
        if not 0 <= m < n_modes:
            raise ParameterError(f"mode index {m} out of range for {n_modes} modes")
    return list(modes) + [n_modes + m for m in modes]


def partial_trace(state: CovarianceState, keep: Sequence[int]) -> CovarianceState:
    """Reduced state on the modes listed in ``keep`` (order preserved)."""
    idx = _mode_indices(state.n_modes, keep)
    return CovarianceState(state.matrix[np.ix_(idx, idx)], state.basis)


def partial_trace_to_ac(state: CovarianceState) -> CovarianceState:
    """Trace out the mediator (mode index 1) of a three-mode state."""
    if state.n_modes != 3:
        raise ParameterError(f"expected a 3-mode state, got {state.n_modes} modes")
    return partial_trace(state, (0, 2))


def partial_transpose(state: CovarianceState, mode: int) -> CovarianceState:
    """Partial transposition of one mode (momentum sign flip)."""
    n = state.n_modes
    _mode_indices(n, (mode,))
    if state.basis is ModeBasis.REAL:
        lam = np.ones(2 * n)
        lam[n + mode] = -1.0
        return CovarianceState(lam[:, None] * state.matrix * lam[None, :], state.basis)
    perm = np.arange(2 * n)
    perm[mode], perm[n + mode] = n + mode, mode
    return CovarianceState(state.matrix[np.ix_(perm, perm)], state.basis)


def partial_transpose_c(state: CovarianceState) -> CovarianceState:
    """Transpose the second retained mode (C) of a reduced two-mode A-C state."""
    if state.n_modes != 2:
        raise ParameterError(f"expected a 2-mode state, got {state.n_modes} modes")
    return partial_transpose(state, 1)


def symplectic_eigenvalues(
    matrix: np.ndarray, omega: np.ndarray | None = None, rtol: float = 1e-8
) -> np.ndarray:
    """Symplectic spectrum of a Hermitian matrix.

    Eigenvalues of ``i Omega M`` come in ``+-`` pairs; their absolute values are
    paired and one entry per mode is returned, sorted ascending.  ``omega``
    defaults to the complex-basis form.

    Raises
    ------
    NumericalError
        If the eigen-solver fails or the pairing is broken beyond ``rtol``.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] % 2:
        raise ParameterError(f"expected an even square matrix, got shape {m.shape}")
    n = m.shape[0] // 2
    if omega is None:
        omega = symplectic_form(n)
    try:
        ev = np.linalg.eigvals(1j * omega @ m)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigen-solver did not converge (cond = {np.linalg.cond(m):.3e})"
        ) from exc
    mags = np.sort(np.abs(ev))
    pairs = mags.reshape(n, 2)
    scale = max(1.0, float(mags[-1]))
    mismatch = np.abs(pairs[:, 0] - pairs[:, 1])
    if np.any(mismatch > rtol * scale + 1e-12):
        raise NumericalError(
            f"symplectic eigenvalue pairing failed (max mismatch {mismatch.max():.3e}, "
            f"cond = {np.linalg.cond(m):.3e})"
        )
    return pairs.mean(axis=1)


def numeric_propagator(
    h: np.ndarray, t: float, basis: ModeBasis = ModeBasis.COMPLEX
) -> np.ndarray:
    """``expm(Omega H t)`` by scaling and squaring (reference propagator)."""
    h = np.asarray(h)
    omega = symplectic_form(h.shape[0] // 2, basis)
    s = scipy.linalg.expm(omega @ h * t)
    if not np.all(np.isfinite(s)):
        raise NumericalError(
            f"matrix exponential overflowed at t = {t!r} (|H| = {np.linalg.norm(h):.3e})"
        )
    return s


def symplectic_residual(s: np.ndarray, omega: np.ndarray | None = None) -> float:
    """``max |S Omega S^dag - Omega|``."""
    s = np.asarray(s)
    if omega is None:
        omega = symplectic_form(s.shape[0] // 2)
    return float(np.max(np.abs(s @ omega @ s.conj().T - omega)))


def random_symplectic(n_modes: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """Random real-basis symplectic matrix ``expm(J K)`` with ``K`` symmetric."""
    k = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    k = (k + k.T) / 2
    j = symplectic_form(n_modes, ModeBasis.REAL)
    return scipy.linalg.expm(j @ k)


def random_physical_state(
    n_modes: int,
    rng: np.random.Generator,
    scale: float = 0.5,
    max_thermal: float = 2.0,
) -> CovarianceState:
    """Random real-basis covariance ``S diag(nu, nu) S^T`` with ``nu >= 1``."""
    s = random_symplectic(n_modes, rng, scale)
    nu = 1.0 + rng.uniform(0.0, max_thermal, size=n_modes)
    d = np.diag(np.concatenate([nu, nu]))
    return CovarianceState(s @ d @ s.T, ModeBasis.REAL)
