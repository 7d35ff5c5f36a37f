"""Numerical search for a Lindbladian whose channel reproduces a stochastic matrix.

The objective is the embedding error ``max_ij |T_ij - <i|exp(L t)(|j><j|)|i>|``
minimised with Nelder-Mead from seeded random starts. Positive quantities
(rates, time) are optimised through their logarithm so the search stays
unconstrained.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import matcore as mc
from .errors import ContractViolation, DimensionError, DomainError
from .lindblad import (
    Lindbladian,
    action_matrix,
    dissipator_superop,
    generator_matrix,
    kraus_from_choi,
    superop_from_choi,
)
from .stochastic import StochasticMatrix

DEFAULT_DELTA = 1e-4
DEFAULT_RESTARTS = 64

NM_REFLECT = 1.0
NM_EXPAND = 2.0
NM_CONTRACT = 0.5
NM_SHRINK = 0.5
NM_XTOL = 1e-10
NM_FTOL = 1e-12
NM_MAXITER = 20_000

LOG_GAMMA_RANGE = (math.log(1e-3), math.log(1e3))
LOG_T_RANGE = (math.log(1e-3), math.log(1e2))


class Kind(enum.Enum):
    GENERAL_QUBIT = "general-qubit"
    REDUCED_QUBIT = "reduced-qubit"
    GENERAL_D = "general-d"


@dataclass(frozen=True)
class Parameterization:
    """Coordinates of the search space.

    GENERAL_QUBIT: ``h``, 16 real + 16 imaginary parts of the 4x4 Choi factor
    ``G``, ``log t``. REDUCED_QUBIT: ``alpha``, ``beta``, ``log gamma``,
    ``log t`` with ``H = sigma_x`` and a single jump operator.
    GENERAL_D: ``d**2`` reals for a Hermitian ``H``, ``2 d**4`` for ``G``,
    then ``log t``.
    """

    kind: Kind
    dim: int = 2

    def __post_init__(self):
        if self.kind in (Kind.GENERAL_QUBIT, Kind.REDUCED_QUBIT) and self.dim != 2:
            raise DimensionError(f"{self.kind.value} is a qubit parameterization")
        if self.dim < 1:
            raise DimensionError("dim must be positive")

    @classmethod
    def general_qubit(cls) -> "Parameterization":
        return cls(Kind.GENERAL_QUBIT, 2)

    @classmethod
    def reduced_qubit(cls) -> "Parameterization":
        return cls(Kind.REDUCED_QUBIT, 2)

    @classmethod
    def general_d(cls, d: int) -> "Parameterization":
        return cls(Kind.GENERAL_D, d)

    @classmethod
    def parse(cls, name: str, dim: int = 2) -> "Parameterization":
        kind = Kind(name)
        return cls(kind, dim if kind is Kind.GENERAL_D else 2)

    @property
    def param_count(self) -> int:
        if self.kind is Kind.GENERAL_QUBIT:
            return 34
        if self.kind is Kind.REDUCED_QUBIT:
            return 4
        d = self.dim
        return d * d + 2 * d ** 4 + 1

    @property
    def step(self) -> np.ndarray:
        """Initial simplex edge length per coordinate."""
        return np.full(self.param_count, 0.5)


def _split(params, p: Parameterization) -> np.ndarray:
    x = np.asarray(params, dtype=float).ravel()
    if x.size != p.param_count:
        raise ContractViolation(f"{p.kind.value} takes {p.param_count} parameters, got {x.size}")
    return x


def _hermitian_from_reals(x: np.ndarray, d: int) -> np.ndarray:
    H = np.zeros((d, d), dtype=complex)
    H[np.diag_indices(d)] = x[:d]
    iu = np.triu_indices(d, 1)
    m = len(iu[0])
    H[iu] = x[d : d + m] + 1j * x[d + m : d + 2 * m]
    return H + np.triu(H, 1).conj().T


def reduced_jump(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """``sqrt(gamma) |psi_out><psi_in|`` with ``|psi> = (cos x, i sin x)``."""
    out = np.array([math.cos(alpha), 1j * math.sin(alpha)])
    inp = np.array([math.cos(beta), 1j * math.sin(beta)])
    return math.sqrt(gamma) * np.outer(out, np.conj(inp))


def _choi_factor(x: np.ndarray, n: int) -> np.ndarray:
    m = n * n
    return (x[:m] + 1j * x[m : 2 * m]).reshape(n, n)


def _components(x: np.ndarray, p: Parameterization):
    """(H, dissipator superoperator or None, jump list or None, t) for decoded params."""
    if p.kind is Kind.GENERAL_QUBIT:
        h = x[0]
        H = np.array([[math.cos(h), math.sin(h)], [math.sin(h), math.cos(h)]], dtype=complex)
        G = _choi_factor(x[1:33], 4)
        return H, G @ G.conj().T, None, math.exp(x[33])
    if p.kind is Kind.REDUCED_QUBIT:
        A = reduced_jump(x[0], x[1], math.exp(x[2]))
        return mc.SIGMA_X.copy(), None, (A,), math.exp(x[3])
    d = p.dim
    H = _hermitian_from_reals(x[: d * d], d)
    G = _choi_factor(x[d * d : d * d + 2 * d ** 4], d * d)
    return H, G @ G.conj().T, None, math.exp(x[-1])


def decode(params, p: Parameterization) -> tuple[Lindbladian, float]:
    """Map raw coordinates to a Lindbladian (Kraus form) and an evolution time."""
    x = _split(params, p)
    H, J, jumps, t = _components(x, p)
    if jumps is None:
        jumps = kraus_from_choi(0.5 * (J + J.conj().T))
    return Lindbladian(H, tuple(jumps)), t


def encode_reduced(alpha: float, beta: float, gamma: float, t: float) -> np.ndarray:
    """Raw REDUCED_QUBIT coordinates for physical values; ``gamma = 0`` maps to ``-inf``."""
    if gamma < 0 or t <= 0:
        raise DomainError("gamma must be non-negative and t positive")
    with np.errstate(divide="ignore"):
        return np.array([alpha, beta, np.log(gamma), math.log(t)])


def generator_and_time(params, p: Parameterization) -> tuple[np.ndarray, float]:
    """Generator superoperator built without a Kraus decomposition (hot path)."""
    x = _split(params, p)
    H, J, jumps, t = _components(x, p)
    if jumps is None:
        dissipator = superop_from_choi(J)
    else:
        dissipator = dissipator_superop(jumps)
    return generator_matrix(H, dissipator), t


def objective(T: StochasticMatrix, params, p: Parameterization) -> float:
    if T.dim != p.dim:
        raise DimensionError(f"target has d = {T.dim}, parameterization has d = {p.dim}")
    G, t = generator_and_time(params, p)
    S = mc.expm(G * t)
    return float(np.max(np.abs(T.entries - action_matrix(S))))


@dataclass(frozen=True)
class NelderMeadResult:
    x: np.ndarray
    fun: float
    iterations: int
    nfev: int
    soft_failures: int
    reason: str


def nelder_mead(
    f,
    x0,
    step=0.5,
    max_iter: int = NM_MAXITER,
    xtol: float = NM_XTOL,
    ftol: float = NM_FTOL,
    f_target: float | None = None,
) -> NelderMeadResult:
    """Minimise ``f`` with the standard Nelder-Mead simplex method.

    Coefficients are reflection 1, expansion 2, contraction 0.5 and shrink 0.5.
    Stops when the simplex diameter drops below ``xtol``, the spread of
    function values below ``ftol``, the best value reaches ``f_target``, or
    after ``max_iter`` iterations. Non-finite evaluations are treated as
    ``+inf`` and counted in ``soft_failures``; a non-finite initial vertex is
    pulled back toward ``x0`` until it evaluates.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    n = x0.size
    steps = np.broadcast_to(np.asarray(step, dtype=float), (n,))
    nfev = 0
    soft = 0

    def fs(x):
        nonlocal nfev, soft
        nfev += 1
        try:
            v = float(f(x))
        except (FloatingPointError, np.linalg.LinAlgError, OverflowError):
            v = math.inf
        if not math.isfinite(v):
            soft += 1
            return math.inf
        return v

    f0 = fs(x0)
    if not math.isfinite(f0):
        raise ContractViolation("objective is not finite at the starting point")
    sim = np.empty((n + 1, n))
    fv = np.empty(n + 1)
    sim[0], fv[0] = x0, f0
    for k in range(n):
        x = x0.copy()
        h = steps[k] if steps[k] != 0 else 0.5
        for _ in range(30):
            x[k] = x0[k] + h
            val = fs(x)
            if math.isfinite(val):
                break
            h *= 0.5
        sim[k + 1], fv[k + 1] = x, val

    it = 0
    reason = "max_iter"
    while it < max_iter:
        order = np.argsort(fv, kind="stable")
        sim, fv = sim[order], fv[order]
        if f_target is not None and fv[0] <= f_target:
            reason = "target"
            break
        if np.max(np.abs(sim[1:] - sim[0])) < xtol:
            reason = "xtol"
            break
        if math.isfinite(fv[-1]) and fv[-1] - fv[0] < ftol:
            reason = "ftol"
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        worst = sim[-1]
        xr = centroid + NM_REFLECT * (centroid - worst)
        fr = fs(xr)
        if fr < fv[0]:
            xe = centroid + NM_EXPAND * (xr - centroid)
            fe = fs(xe)
            if fe < fr:
                sim[-1], fv[-1] = xe, fe
            else:
                sim[-1], fv[-1] = xr, fr
            continue
        if fr < fv[-2]:
            sim[-1], fv[-1] = xr, fr
            continue
        if fr < fv[-1]:
            xc = centroid + NM_CONTRACT * (xr - centroid)
            fc = fs(xc)
            if fc <= fr:
                sim[-1], fv[-1] = xc, fc
                continue
        else:
            xc = centroid + NM_CONTRACT * (worst - centroid)
            fc = fs(xc)
            if fc < fv[-1]:
                sim[-1], fv[-1] = xc, fc
                continue
        for k in range(1, n + 1):
            sim[k] = sim[0] + NM_SHRINK * (sim[k] - sim[0])
            fv[k] = fs(sim[k])
    best = int(np.argmin(fv))
    return NelderMeadResult(sim[best].copy(), float(fv[best]), it, nfev, soft, reason)


def initial_point(p: Parameterization, rng: np.random.Generator) -> np.ndarray:
    """Random start: angles uniform on [0, 2 pi), rates and times log-uniform,
    Choi-factor entries standard normal."""
    log_t = rng.uniform(*LOG_T_RANGE)
    if p.kind is Kind.REDUCED_QUBIT:
        alpha, beta = rng.uniform(0.0, 2 * math.pi, size=2)
        return np.array([alpha, beta, rng.uniform(*LOG_GAMMA_RANGE), log_t])
    if p.kind is Kind.GENERAL_QUBIT:
        h = rng.uniform(0.0, 2 * math.pi)
        return np.concatenate([[h], rng.standard_normal(32), [log_t]])
    d = p.dim
    return np.concatenate([rng.standard_normal(d * d), rng.standard_normal(2 * d ** 4), [log_t]])


def restart_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream per restart, so results do not depend on execution order."""
    return np.random.default_rng([int(seed), int(index)])


@dataclass(frozen=True)
class SearchResult:
    best_objective: float
    best_params: np.ndarray
    verdict: str
    restarts_used: int
    seed: int
    delta: float
    parameterization: str
    best_restart: int = 0
    history: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "best_objective": self.best_objective,
            "best_params": [float(v) for v in self.best_params],
            "verdict": self.verdict,
            "restarts_used": self.restarts_used,
            "seed": self.seed,
            "delta": self.delta,
            "parameterization": self.parameterization,
            "best_restart": self.best_restart,
        }


def run_restart(T: StochasticMatrix, p: Parameterization, delta: float, seed: int, index: int, max_iter: int):
    x0 = initial_point(p, restart_rng(seed, index))
    res = nelder_mead(lambda x: objective(T, x, p), x0, p.step, max_iter=max_iter, f_target=delta)
    return res


def embed_search(
    T: StochasticMatrix,
    p: Parameterization | None = None,
    restarts: int = DEFAULT_RESTARTS,
    delta: float = DEFAULT_DELTA,
    seed: int = 0,
    max_iter: int = NM_MAXITER,
    stop_early: bool = True,
    x0=None,
) -> SearchResult:
    """Multistart Nelder-Mead search for an embedding of ``T`` at precision ``delta``.

    Restart ``k`` draws its start from ``default_rng([seed, k])``; with
    ``stop_early`` the loop ends at the first restart reaching ``delta``.
    An optional ``x0`` is tried before the random restarts. The best result
    wins, ties going to the lower restart index.
    """
    if restarts < 1:
        raise DomainError("restarts must be at least 1")
    if delta <= 0:
        raise DomainError("delta must be positive")
    p = p or Parameterization.general_qubit()
    if T.dim != p.dim:
        raise DimensionError(f"target has d = {T.dim}, parameterization has d = {p.dim}")
    best = None
    best_index = -1
    history = []
    used = 0
    if x0 is not None:
        res = nelder_mead(lambda x: objective(T, x, p), x0, p.step, max_iter=max_iter, f_target=delta)
        best, best_index = res, -1
        history.append(res.fun)
    if best is None or not (stop_early and best.fun <= delta):
        for k in range(restarts):
            res = run_restart(T, p, delta, seed, k, max_iter)
            used += 1
            history.append(res.fun)
            if best is None or res.fun < best.fun:
                best, best_index = res, k
            if stop_early and best.fun <= delta:
                break
    verdict = "embeddable_at_delta" if best.fun <= delta else "inconclusive"
    return SearchResult(
        best_objective=best.fun,
        best_params=best.x,
        verdict=verdict,
        restarts_used=used,
        seed=seed,
        delta=delta,
        parameterization=p.kind.value,
        best_restart=best_index,
        history=tuple(history),
    )
