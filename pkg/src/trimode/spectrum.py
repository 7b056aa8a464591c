"""Closed-form diagonalisation of the three-oscillator Hamiltonian.

The Hamiltonian is ``H = X^dag H X / 2`` with ``H = [[U, V], [V, U]]`` and
``X = (a, b, c, a^dag, b^dag, c^dag)``.  Oscillators A and C share
``(omega_a, lambda_a)``; B is the mediator.

Two branches provide Bogoliubov matrices ``alpha, beta`` (rows: normal
modes, columns: oscillators A, B, C):

* the generic branch, valid while ``omega_b > lambda_b``;
* the heavy-mediator branch at ``omega_b == lambda_b``.  There the
  quadratic form has a one-dimensional kernel (``p_B`` drops out) and is not
  symplectically diagonalisable.  The branch diagonalises everything except
  a residual ``kappa * x_B**2`` term with
  ``kappa = omega_b - 2 (g_a**2 + g_b**2) / (omega_a + lambda_a)``, which
  commutes with the rest and generates a linear drift ``p_B -> p_B - 2 kappa
  x_B t``.  That curvature is carried on :class:`BogoliubovMatrices` so the
  propagator stays exact.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditioningWarning, ParameterError, RegimeError

EXACT_HMR_RTOL = 1e-9
CONDITIONING_RTOL = 1e-6
NEAR_RTOL = 1e-3

PARAM_NAMES = ("omega_a", "omega_b", "lambda_a", "lambda_b", "g_a", "g_b")


@dataclass(frozen=True)
class OscillatorParams:
    """Hamiltonian parameters (hbar = 1, all in the same frequency unit).

    Raises :class:`ParameterError` on construction if a frequency bound is
    violated.  The coupling-strength stability bound is *reported* by
    :func:`stability_check` rather than enforced here, so sweeps can record
    unstable grid points.
    """

    omega_a: float
    omega_b: float
    lambda_a: float
    lambda_b: float
    g_a: float
    g_b: float

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.omega_a <= 0:
            raise ParameterError(f"omega_a must be > 0, got {self.omega_a}")
        if self.omega_b <= 0:
            raise ParameterError(f"omega_b must be > 0, got {self.omega_b}")
        if self.lambda_a < 0 or self.lambda_b < 0:
            raise ParameterError("lambda_a and lambda_b must be >= 0")
        if not self.lambda_a < self.omega_a:
            raise ParameterError(
                f"need omega_a > lambda_a, got omega_a={self.omega_a}, lambda_a={self.lambda_a}"
            )
        if self.lambda_b > self.omega_b:
            raise ParameterError(
                f"need omega_b >= lambda_b, got omega_b={self.omega_b}, lambda_b={self.lambda_b}"
            )

    @classmethod
    def symmetric(cls, omega: float, g: float) -> OscillatorParams:
        """Degenerate frequencies, no self-squeezing, equal couplings."""
        return cls(omega, omega, 0.0, 0.0, g, g)

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def replace(self, **changes: float) -> OscillatorParams:
        values = self.as_dict()
        values.update(changes)
        return OscillatorParams(**values)


@dataclass(frozen=True)
class QuadraticForm:
    u: np.ndarray
    v: np.ndarray

    @property
    def h(self) -> np.ndarray:
        return np.block([[self.u, self.v], [self.v, self.u]])


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    margin: float


class Regime(str, enum.Enum):
    GENERIC = "generic"
    NEAR_HMR = "near_hmr"
    EXACT_HMR = "exact_hmr"
    NEAR_LMR = "near_lmr"


class Branch(str, enum.Enum):
    GENERIC = "generic"
    HMR = "hmr"


@dataclass(frozen=True)
class ClosedFormSpectrum:
    """Normal-mode frequencies in the closed-form labelling.

    ``k1`` is the mode decoupled from the mediator, ``k2``/``k3`` the minus and
    plus roots.  They are not sorted.
    """

    k1: float
    k2: float
    k3: float
    q: float
    regime: Regime

    @property
    def k_tilde(self) -> np.ndarray:
        return np.array([self.k1, self.k2, self.k3])

    @property
    def k_min_positive(self) -> float:
        positive = [k for k in (self.k1, self.k2, self.k3) if k > 0]
        return min(positive)

    @property
    def k_max(self) -> float:
        return max(self.k1, self.k2, self.k3)


@dataclass(frozen=True)
class PhaseAngles:
    x1: float
    y1: float
    x2: float
    y2: float
    t: float


@dataclass(frozen=True)
class HmrGauge:
    """Free parameters of the heavy-mediator Bogoliubov matrices."""

    chi1: float = 1.0
    chi2: float = math.sqrt(2.0)

    def __post_init__(self) -> None:
        if not abs(self.chi2) - 1.0 > 1e-6:
            raise ParameterError(f"HMR gauge needs |chi2| > 1, got chi2={self.chi2}")


@dataclass(frozen=True)
class BogoliubovMatrices:
    alpha: np.ndarray
    beta: np.ndarray
    branch: Branch
    k_tilde: np.ndarray
    # curvature of the frozen mediator quadrature; zero on the generic branch
    frozen_curvature: float = 0.0
    phases: PhaseAngles | None = field(default=None, compare=False)

    def identity_residuals(self) -> tuple[float, float]:
        """Residuals of ``a a^T - b b^T = I`` and ``a b^T - b a^T = 0``."""
        a, b = self.alpha, self.beta
        r1 = np.max(np.abs(a @ a.T - b @ b.T - np.eye(3)))
        r2 = np.max(np.abs(a @ b.T - b @ a.T))
        return float(r1), float(r2)

    def reconstruct(self) -> tuple[np.ndarray, np.ndarray]:
        """``(U, V)`` rebuilt from ``alpha``, ``beta`` and the mode frequencies.

        On the HMR branch this is the quadratic form *without* the frozen
        mediator term ``kappa x_B**2``; see :meth:`frozen_term`.
        """
        a, b, k = self.alpha, self.beta, np.diag(self.k_tilde)
        return a.T @ k @ a + b.T @ k @ b, a.T @ k @ b + b.T @ k @ a

    def frozen_term(self) -> np.ndarray:
        """Contribution of the frozen mediator term to both ``U`` and ``V``."""
        e = np.zeros((3, 3))
        e[1, 1] = self.frozen_curvature
        return e

    def reconstruction_residual(self, form: QuadraticForm) -> float:
        """Residual against ``form`` with the frozen term restored."""
        u, v = self.reconstruct()
        extra = self.frozen_term()
        return float(max(np.max(np.abs(u + extra - form.u)), np.max(np.abs(v + extra - form.v))))


def stability_check(p: OscillatorParams) -> StabilityReport:
    """Coupling bound ``g_a^2 + g_b^2 <= (omega_a+lambda_a)(omega_b+lambda_b)/4``."""
    margin = 0.25 * (p.omega_a + p.lambda_a) * (p.omega_b + p.lambda_b) - (
        p.g_a**2 + p.g_b**2
    )
    return StabilityReport(ok=margin >= 0, margin=margin)


def build_quadratic_form(p: OscillatorParams) -> QuadraticForm:
    report = stability_check(p)
    if not report.ok:
        raise ParameterError(
            "stability bound g_a^2 + g_b^2 <= (omega_a+lambda_a)(omega_b+lambda_b)/4 "
            f"violated (margin {report.margin:.6g})"
        )
    u = np.array(
        [[p.omega_a, p.g_a, 0.0], [p.g_a, p.omega_b, p.g_b], [0.0, p.g_b, p.omega_a]]
    )
    v = np.array(
        [[p.lambda_a, p.g_a, 0.0], [p.g_a, p.lambda_b, p.g_b], [0.0, p.g_b, p.lambda_a]]
    )
    return QuadraticForm(u, v)


def classify_regime(p: OscillatorParams) -> Regime:
    hmr_ratio = (p.omega_b - p.lambda_b) / p.omega_b
    if hmr_ratio < EXACT_HMR_RTOL:
        return Regime.EXACT_HMR
    if hmr_ratio < NEAR_RTOL:
        return Regime.NEAR_HMR
    if (p.omega_a - p.lambda_a) / p.omega_a < NEAR_RTOL:
        return Regime.NEAR_LMR
    return Regime.GENERIC


def _discriminant(p: OscillatorParams) -> float:
    # algebraically equal to s^2 - 4ab[(wa+la)(wb+lb) - 4G] but free of cancellation
    ka2 = p.omega_a**2 - p.lambda_a**2
    kb2 = p.omega_b**2 - p.lambda_b**2
    g2 = p.g_a**2 + p.g_b**2
    return (ka2 - kb2) ** 2 + 16.0 * (p.omega_a - p.lambda_a) * (p.omega_b - p.lambda_b) * g2


def closed_form_spectrum(p: OscillatorParams) -> ClosedFormSpectrum:
    report = stability_check(p)
    if not report.ok:
        raise ParameterError(
            f"parameters violate the stability bound (margin {report.margin:.6g})"
        )
    a = p.omega_a - p.lambda_a
    b = p.omega_b - p.lambda_b
    s = p.omega_a**2 + p.omega_b**2 - p.lambda_a**2 - p.lambda_b**2
    q = _discriminant(p)
    r = 4.0 * report.margin
    k1 = math.sqrt(p.omega_a**2 - p.lambda_a**2)
    k3_sq = 0.5 * (s + math.sqrt(q))
    # product of the two coupled roots is a*b*R; avoids cancellation in s - sqrt(Q)
    k2_sq = a * b * r / k3_sq
    return ClosedFormSpectrum(
        k1=k1,
        k2=math.sqrt(max(k2_sq, 0.0)),
        k3=math.sqrt(k3_sq),
        q=q,
        regime=classify_regime(p),
    )


def phase_angles(p: OscillatorParams, spec: ClosedFormSpectrum) -> PhaseAngles:
    g2 = p.g_a**2 + p.g_b**2
    if g2 > 0:
        norm = math.sqrt(g2)
        x1, y1 = p.g_b / norm, p.g_a / norm
    else:
        # decoupled: A and C are degenerate, any orthonormal pair diagonalises
        x1 = y1 = 1.0 / math.sqrt(2.0)
    a = p.omega_a - p.lambda_a
    b = p.omega_b - p.lambda_b
    # d = k2^2 - k1^2 = (kb2 - ka2 - sqrt(Q)) / 2, rationalised where it cancels;
    # differencing the rounded roots mislabels the modes as g -> 0
    gap = (p.omega_b**2 - p.lambda_b**2) - (p.omega_a**2 - p.lambda_a**2)
    root_q = math.sqrt(spec.q)
    if gap > 0:
        d = -8.0 * a * b * g2 / (gap + root_q)
    else:
        d = 0.5 * (gap - root_q)
    t = d**2 + 4.0 * a * b * g2
    if t > 0:
        x2, y2 = d / math.sqrt(t), 2.0 * math.sqrt(a * b * g2) / math.sqrt(t)
    else:
        # k2 == k1 with no coupling: the k2 mode is the symmetric A-C mode
        x2, y2 = 0.0, 1.0
    return PhaseAngles(x1=x1, y1=y1, x2=x2, y2=y2, t=t)


def _amp(k: float, w: float, sign: float) -> float:
    return (k + sign * w) / (2.0 * math.sqrt(k * w))


def bogoliubov_generic(p: OscillatorParams, spec: ClosedFormSpectrum) -> BogoliubovMatrices:
    """Closed-form Bogoliubov matrices away from the heavy-mediator point."""
    if spec.regime is Regime.EXACT_HMR:
        raise RegimeError("exact heavy-mediator parameters: use bogoliubov_hmr")
    if spec.k2 <= 0:
        raise RegimeError("k2 = 0 on the stability boundary; generic branch undefined")
    hmr_ratio = (p.omega_b - p.lambda_b) / p.omega_b
    if hmr_ratio < CONDITIONING_RTOL:
        warnings.warn(
            f"(omega_b - lambda_b)/omega_b = {hmr_ratio:.2e}: generic Bogoliubov "
            "coefficients lose precision this close to the heavy-mediator point",
            ConditioningWarning,
            stacklevel=2,
        )
    ph = phase_angles(p, spec)
    a = p.omega_a - p.lambda_a
    b = p.omega_b - p.lambda_b
    k1, k2, k3 = spec.k1, spec.k2, spec.k3
    x1, y1, x2, y2 = ph.x1, ph.y1, ph.x2, ph.y2

    def table(sign: float) -> np.ndarray:
        return np.array(
            [
                [_amp(k1, a, sign) * x1, 0.0, -_amp(k1, a, sign) * y1],
                [_amp(k2, a, sign) * y1 * y2, _amp(k2, b, sign) * x2, _amp(k2, a, sign) * x1 * y2],
                [-_amp(k3, a, sign) * y1 * x2, _amp(k3, b, sign) * y2, -_amp(k3, a, sign) * x1 * x2],
            ]
        )

    return BogoliubovMatrices(
        alpha=table(+1.0),
        beta=table(-1.0),
        branch=Branch.GENERIC,
        k_tilde=spec.k_tilde,
        phases=ph,
    )


def frozen_curvature(p: OscillatorParams) -> float:
    """Residual ``x_B**2`` coefficient left over by the heavy-mediator modes."""
    return p.omega_b - 2.0 * (p.g_a**2 + p.g_b**2) / (p.omega_a + p.lambda_a)


def bogoliubov_hmr(p: OscillatorParams, gauge: HmrGauge = HmrGauge()) -> BogoliubovMatrices:
    """Bogoliubov matrices at ``omega_b == lambda_b``.

    The mode frequencies are ``(k1, 0, k1)``.  Any valid gauge yields the same
    propagator; only the intermediate matrices depend on it.
    """
    if classify_regime(p) is not Regime.EXACT_HMR:
        raise RegimeError("bogoliubov_hmr requires omega_b == lambda_b")
    c1, c2 = gauge.chi1, gauge.chi2
    a = p.omega_a - p.lambda_a
    s = p.omega_a + p.lambda_a
    k1 = math.sqrt(p.omega_a**2 - p.lambda_a**2)
    n = math.sqrt(1.0 + c1**2) * math.sqrt(k1 * a)
    d = math.sqrt(c2**2 - 1.0)
    ga, gb = p.g_a, p.g_b
    mid1 = k1 * (gb + c1 * ga) / (s * n)
    mid3 = k1 * (ga - c1 * gb) / (s * n)
    side = (c2 - 1.0) / (s * d)

    def outer(sign: float) -> tuple[list[float], list[float]]:
        w = (k1 + sign * a) / (2.0 * n)
        return [c1 * w, w], [w, -c1 * w]

    (a11, a13), (a31, a33) = outer(+1.0)
    (b11, b13), (b31, b33) = outer(-1.0)
    alpha = np.array(
        [
            [a11, mid1, a13],
            [-side * ga, c2 / d, -side * gb],
            [a31, mid3, a33],
        ]
    )
    beta = np.array(
        [
            [b11, mid1, b13],
            [side * ga, 1.0 / d, side * gb],
            [b31, mid3, b33],
        ]
    )
    return BogoliubovMatrices(
        alpha=alpha,
        beta=beta,
        branch=Branch.HMR,
        k_tilde=np.array([k1, 0.0, k1]),
        frozen_curvature=frozen_curvature(p),
    )


def bogoliubov(
    p: OscillatorParams,
    spec: ClosedFormSpectrum | None = None,
    gauge: HmrGauge = HmrGauge(),
) -> BogoliubovMatrices:
    """Pick the branch appropriate to ``p``."""
    if spec is None:
        spec = closed_form_spectrum(p)
    if spec.regime is Regime.EXACT_HMR:
        return bogoliubov_hmr(p, gauge)
    return bogoliubov_generic(p, spec)
