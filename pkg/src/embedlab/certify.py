"""Analytic certificates and numerical checks of the supporting bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matcore as mc
from .errors import ContractViolation, DimensionError, DomainError, UnsupportedDimension
from .lindblad import Lindbladian, build_generator, channel_at
from .stochastic import StochasticMatrix

THEOREM1_A_MAX = 1e-6
KRYLOV_RANK_TOL = 1e-10
KRYLOV_BORDERLINE = 1e-6
KRYLOV_BOUND_RTOL = 1e-12
PURITY_GRID = 64


def _pow(a: float, p: float) -> float:
    # 0 ** p for p > 0 is taken as 0 by continuity.
    return 0.0 if a == 0.0 else a ** p


def f_g_eval(a: float) -> tuple[float, float]:
    """The two boundary functions of the qubit non-embeddability region."""
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    root = math.sqrt(a)
    inner = 8.0 * root + _pow(a, 0.45)
    if inner >= 1.0:
        raise DomainError(f"a = {a} is too large: 1 - (8 sqrt(a) + a^0.45) <= 0")
    f = (
        2.0 * math.sqrt(2.0) * _pow(a, 0.25)
        + math.sqrt(a * (2.0 - a))
        + _pow(a, 0.9)
        + 0.01 * (4.0 * root + _pow(a, 0.45)) / (1.0 - inner)
        + 2.0 * math.sqrt(inner)
    )
    g = (2.0 - a) * (2.0 * a + _pow(a, 0.1))
    return f, g


@dataclass(frozen=True)
class Theorem1Verdict:
    a: float
    b: float
    swapped: bool
    f_a: float | None
    g_a: float | None
    in_Q2_complement: bool

    def to_dict(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "swapped": self.swapped,
            "f_a": self.f_a,
            "g_a": self.g_a,
            "in_Q2_complement": self.in_Q2_complement,
        }


def _branch(a: float, b: float):
    if a > THEOREM1_A_MAX:
        return None
    f, g = f_g_eval(a)
    return f, g, f * (2.0 - f) < b < 1.0 - g


def theorem1_test(T: StochasticMatrix) -> Theorem1Verdict:
    """Test both ``(a, b)`` and ``(b, a)`` against the open region; no slack."""
    if T.dim != 2:
        raise UnsupportedDimension("theorem1_test requires d = 2")
    a, b = T.ab()
    first = _branch(a, b)
    if first is not None and first[2]:
        return Theorem1Verdict(a, b, False, first[0], first[1], True)
    second = _branch(b, a)
    if second is not None and second[2]:
        return Theorem1Verdict(a, b, True, second[0], second[1], True)
    shown = first if first is not None else second
    return Theorem1Verdict(
        a,
        b,
        first is None and second is not None,
        shown[0] if shown else None,
        shown[1] if shown else None,
        False,
    )


def H_of_d(d: int) -> int:
    """``(d^4 + 1)! / 2 * d^(d^4 + 4)`` as an exact integer."""
    if d < 1:
        raise DomainError("d must be at least 1")
    n = d ** 4
    return math.factorial(n + 1) // 2 * d ** (n + 4)


def H_of_d_factored(d: int) -> str:
    return f"({d ** 4 + 1})!/2 * {d}^{d ** 4 + 4}"


def log_H_of_d(d: int) -> float:
    """Natural log of ``H(d)`` without materialising the integer."""
    n = d ** 4
    return math.lgamma(n + 2) - math.log(2.0) + (n + 4) * math.log(d)


def _big_log(x: int) -> float:
    # math.log accepts arbitrarily large Python ints.
    return math.log(x)


@dataclass(frozen=True)
class Prop2Row:
    t: float
    inner_product: float
    exponent: int
    log_rhs: float
    holds: bool


@dataclass(frozen=True)
class Prop2Report:
    hypothesis_met: bool
    distance_at_tf: float
    epsilon: float
    rows: tuple = ()
    note: str = ""

    @property
    def violations(self) -> int:
        return sum(not r.holds for r in self.rows)


def prop2_check(
    L: Lindbladian, rho1, rho2, t_f: float, epsilon: float, t_grid, slack: float = 1e-12
) -> Prop2Report:
    """Check the Hilbert-Schmidt decay bound for two almost-orthogonal evolved states.

    The right-hand side ``H(d)^ceil((d^4-1) t / t_f) * eps * (2 - eps)`` is
    compared in log space with ``H(d)`` exact, so it never overflows.
    """
    if t_f <= 0:
        raise DomainError("t_f must be positive")
    if not 0.0 <= epsilon <= 1.0:
        raise DomainError("epsilon must lie in [0, 1]")
    r1 = mc.DensityMatrix.coerce(rho1).matrix
    r2 = mc.DensityMatrix.coerce(rho2).matrix
    if r1.shape != r2.shape or r1.shape[0] != L.dim:
        raise DimensionError("state and generator dimensions differ")
    d = L.dim
    G = build_generator(L)
    S_f = channel_at(G, t_f)
    dist = mc.trace_distance(_state(S_f.apply(r1)), _state(S_f.apply(r2)))
    if dist < 1.0 - epsilon:
        return Prop2Report(False, dist, epsilon, note=f"hypothesis unmet: D = {dist:.6g} < 1 - epsilon")
    log_h = _big_log(H_of_d(d))
    base = epsilon * (2.0 - epsilon)
    rows = []
    for t in t_grid:
        if t < 0:
            raise DomainError("t_grid entries must be non-negative")
        S = channel_at(G, t_f + t)
        lhs = float(np.real(np.trace(S.apply(r1) @ S.apply(r2))))
        exponent = math.ceil((d ** 4 - 1) * t / t_f)
        if base == 0.0:
            log_rhs = -math.inf
            holds = lhs <= slack
        else:
            log_rhs = exponent * log_h + math.log(base)
            holds = lhs <= slack or math.log(max(lhs, 1e-300)) <= log_rhs + 1e-12
        rows.append(Prop2Row(float(t), lhs, exponent, log_rhs, holds))
    return Prop2Report(True, dist, epsilon, tuple(rows))


def _state(M) -> mc.DensityMatrix:
    M = 0.5 * (M + mc.dagger(M))
    return mc.DensityMatrix.coerce(M / np.trace(M).real)


def _top_eig(rho: np.ndarray):
    w, V = mc.eig_hermitian(0.5 * (rho + mc.dagger(rho)))
    return float(w[-1]), V[:, -1]


@dataclass(frozen=True)
class PurityReport:
    holds: bool
    epsilon: float
    min_top_eigenvalue: float
    violated_at: float | None
    lemma4_checked: bool = False
    lemma4_holds: bool | None = None
    lemma4_min_eigenvalue: float | None = None
    lemma4_violations: tuple = field(default=())


def purity_preservation_check(
    L: Lindbladian, psi, t_f: float, epsilon: float, steps: int = PURITY_GRID
) -> PurityReport:
    """Test epsilon-purity preservation on a uniform time grid, then the trajectory bound.

    The distance of a state to the nearest pure state is ``1 - lambda_max``. When
    purity is preserved, every grid pair ``t1 + t2 <= t_f`` is checked: the
    top eigenvector at ``t1`` evolved for ``t2`` must keep
    ``lambda_max >= 1 - 2 epsilon``.
    """
    if steps < 2:
        raise DomainError("steps must be at least 2")
    if t_f <= 0:
        raise DomainError("t_f must be positive")
    rho0 = mc.DensityMatrix.coerce(psi).matrix
    if mc.mixedness(rho0) > 1e-6:
        raise ContractViolation("purity check needs a pure initial state")
    dt = t_f / (steps - 1)
    step = channel_at(L, dt).matrix
    powers = [np.eye(step.shape[0], dtype=complex)]
    for _ in range(steps - 1):
        powers.append(step @ powers[-1])
    d = L.dim
    tops = []
    vecs = []
    violated_at = None
    for k, P in enumerate(powers):
        rho = mc.unvec(P @ mc.vec(rho0), d, d)
        lam, v = _top_eig(rho)
        tops.append(lam)
        vecs.append(v)
        if violated_at is None and lam < 1.0 - epsilon:
            violated_at = k * dt
    min_top = float(min(tops))
    if violated_at is not None:
        return PurityReport(False, epsilon, min_top, violated_at)
    lemma_min = math.inf
    bad = []
    for k1, v in enumerate(vecs):
        start = mc.vec(np.outer(v, np.conj(v)))
        for k2 in range(steps - k1):
            lam, _ = _top_eig(mc.unvec(powers[k2] @ start, d, d))
            lemma_min = min(lemma_min, lam)
            if lam < 1.0 - 2.0 * epsilon - 1e-12:
                bad.append((k1 * dt, k2 * dt, lam))
    return PurityReport(True, epsilon, min_top, None, True, not bad, float(lemma_min), tuple(bad))


@dataclass(frozen=True)
class FidelityBoundsReport:
    lower: float
    distance: float
    upper: float
    holds: bool

    def as_tuple(self) -> tuple[float, float, float]:
        return self.lower, self.distance, self.upper


def eq20_bounds_check(rho, sigma, slack: float = 1e-10) -> FidelityBoundsReport:
    """Sandwich ``1 - Tr(rho sigma) - M(rho) M(sigma) <= D <= sqrt(1 - F)``."""
    r = mc.DensityMatrix.coerce(rho)
    s = mc.DensityMatrix.coerce(sigma)
    if r.dim != s.dim:
        raise DimensionError("state dimensions differ")
    overlap = float(np.real(np.trace(r.matrix @ s.matrix)))
    lower = 1.0 - overlap - mc.mixedness(r) * mc.mixedness(s)
    dist = mc.trace_distance(r, s)
    upper = math.sqrt(max(0.0, 1.0 - mc.fidelity(r, s)))
    return FidelityBoundsReport(lower, dist, upper, lower <= dist + slack and dist <= upper + slack)


def operator_norm(A) -> float:
    A = mc.as_matrix(A)
    w, _ = mc.eig_hermitian(mc.dagger(A) @ A)
    return math.sqrt(max(0.0, float(w[-1])))


@dataclass(frozen=True)
class KrylovDependence:
    n: int
    lambdas: np.ndarray
    l1_norm: float
    bound: float
    residual: float
    norm_A: float
    borderline: bool = False

    @property
    def holds(self) -> bool:
        # The bound is attained (e.g. A = c I), so allow for rounding in both sides.
        return self.l1_norm <= self.bound * (1.0 + KRYLOV_BOUND_RTOL)


def krylov_bound(n: int, norm_A: float) -> float:
    return n * math.factorial(n + 1) / 2 * max(norm_A, norm_A ** n)


def krylov_dependence(A, v, rank_tol: float = KRYLOV_RANK_TOL) -> KrylovDependence:
    """Smallest ``n`` with ``A^n v`` in the span of ``v, ..., A^(n-1) v``.

    Dependence is declared when the component of ``A^k v`` orthogonal to the
    previous Krylov vectors falls below ``rank_tol`` times its norm. The
    coefficients come from least squares on the (non-orthogonal) Krylov basis;
    ``borderline`` flags an orthogonal residual that was small but above the
    threshold on some earlier step.
    """
    A = mc.as_matrix(A, square=True)
    v = np.asarray(v, dtype=complex).ravel()
    dim = A.shape[0]
    if v.shape != (dim,):
        raise DimensionError(f"vector of length {v.size} for a {dim}x{dim} matrix")
    if not np.any(v):
        raise ContractViolation("krylov_dependence needs a non-zero vector")
    v = v / np.linalg.norm(v)
    krylov = [v]
    Q = [v]
    borderline = False
    n = dim
    for k in range(1, dim + 1):
        w = A @ krylov[-1]
        r = w.copy()
        for _ in range(2):
            for q in Q:
                r -= np.vdot(q, r) * q
        scale = max(float(np.linalg.norm(w)), 1e-300)
        ratio = float(np.linalg.norm(r)) / scale
        if ratio <= rank_tol or k == dim:
            n = k
            target = w
            break
        if ratio <= KRYLOV_BORDERLINE:
            borderline = True
        krylov.append(w)
        Q.append(r / np.linalg.norm(r))
    K = np.column_stack(krylov[:n])
    lambdas, *_ = np.linalg.lstsq(K, target, rcond=None)
    resid = float(np.linalg.norm(K @ lambdas - target)) / max(float(np.linalg.norm(target)), 1.0)
    norm_A = operator_norm(A)
    l1 = float(np.sum(np.abs(lambdas)))
    return KrylovDependence(n, lambdas, l1, krylov_bound(n, norm_A), resid, norm_A, borderline)
