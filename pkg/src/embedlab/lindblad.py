"""GKLS generators, the channels they generate, and constructive embeddings.

A generator acts as ``L(rho) = -i[H, rho] + sum_k A_k rho A_k^dag
- 1/2 {sum_k A_k^dag A_k, rho}``. Superoperators act on row-vectorised
operators (see :mod:`embedlab.matcore`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import matcore as mc
from .errors import ContractViolation, DimensionError, DomainError, ValidationError
from .stochastic import StochasticMatrix

GENERATOR_TOL = 1e-10
CHANNEL_TOL = 1e-9
CP_PROBE_TIME = 1e-6
THEOREM3_GAMMA = 1e3
THEOREM3_TF = 1.0


@dataclass(frozen=True, eq=False)
class Lindbladian:
    hamiltonian: np.ndarray
    kraus_ops: tuple = field(default=())

    def __post_init__(self):
        H = mc.as_matrix(self.hamiltonian, square=True)
        if mc.hermiticity_error(H) > GENERATOR_TOL:
            raise ContractViolation("Hamiltonian is not Hermitian")
        d = H.shape[0]
        ops = []
        for A in self.kraus_ops:
            A = mc.as_matrix(A, square=True)
            if A.shape != (d, d):
                raise DimensionError(f"Kraus operator of shape {A.shape} for d = {d}")
            ops.append(A)
        object.__setattr__(self, "hamiltonian", 0.5 * (H + mc.dagger(H)))
        object.__setattr__(self, "kraus_ops", tuple(ops))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @classmethod
    def zero(cls, d: int) -> "Lindbladian":
        return cls(np.zeros((d, d), dtype=complex))

    def __add__(self, other: "Lindbladian") -> "Lindbladian":
        if self.dim != other.dim:
            raise DimensionError("cannot add Lindbladians of different dimension")
        return Lindbladian(self.hamiltonian + other.hamiltonian, self.kraus_ops + other.kraus_ops)

    def scaled(self, gamma: float) -> "Lindbladian":
        if gamma < 0:
            raise DomainError("a Lindbladian can only be scaled by a non-negative factor")
        root = math.sqrt(gamma)
        return Lindbladian(gamma * self.hamiltonian, tuple(root * A for A in self.kraus_ops))

    def to_dict(self) -> dict:
        def pairs(M):
            return [[float(z.real), float(z.imag)] for z in np.asarray(M).ravel()]

        return {"dim": self.dim, "H": pairs(self.hamiltonian), "kraus": [pairs(A) for A in self.kraus_ops]}

    @classmethod
    def from_dict(cls, data: dict) -> "Lindbladian":
        d = int(data["dim"])

        def matrix(entries):
            arr = np.asarray(entries, dtype=float)
            if arr.shape != (d * d, 2):
                raise ValidationError(f"expected {d * d} [re, im] pairs, got shape {arr.shape}")
            return (arr[:, 0] + 1j * arr[:, 1]).reshape(d, d)

        return cls(matrix(data["H"]), tuple(matrix(k) for k in data.get("kraus", [])))


@dataclass(frozen=True, eq=False)
class Superoperator:
    matrix: np.ndarray

    def __post_init__(self):
        S = mc.as_matrix(self.matrix, square=True)
        d = math.isqrt(S.shape[0])
        if d * d != S.shape[0]:
            raise DimensionError(f"superoperator size {S.shape[0]} is not a perfect square")
        object.__setattr__(self, "matrix", S)

    @property
    def dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])

    def apply(self, rho) -> np.ndarray:
        X = np.asarray(rho, dtype=complex)
        return mc.unvec(self.matrix @ mc.vec(X), self.dim, self.dim)

    def choi(self) -> np.ndarray:
        return choi_from_superop(self.matrix)

    def __matmul__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix @ other.matrix)

    @classmethod
    def identity(cls, d: int) -> "Superoperator":
        return cls(np.eye(d * d, dtype=complex))

    @classmethod
    def from_kraus(cls, kraus) -> "Superoperator":
        return cls(dissipator_superop(kraus))


def dissipator_superop(kraus) -> np.ndarray:
    """Superoperator of ``rho -> sum_k A_k rho A_k^dag``, i.e. ``sum_k A_k (x) conj(A_k)``."""
    kraus = [np.asarray(A, dtype=complex) for A in kraus]
    d = kraus[0].shape[0]
    out = np.zeros((d, d, d, d), dtype=complex)
    for A in kraus:
        out += A[:, None, :, None] * np.conj(A)[None, :, None, :]
    return out.reshape(d * d, d * d)


def _reshuffle(M: np.ndarray) -> np.ndarray:
    # Swaps the superoperator index pairs (a,b),(i,j) <-> Choi pairs (a,i),(b,j); an involution.
    n = M.shape[0]
    d = math.isqrt(n)
    return M.reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(n, n)


def choi_from_superop(S: np.ndarray) -> np.ndarray:
    """Choi matrix ``J = sum_ij Phi(|i><j|) (x) |i><j|``.

    With this ordering ``Phi(rho) = Tr_2[J (I (x) rho^T)]``.
    """
    return _reshuffle(np.asarray(S))


def superop_from_choi(J: np.ndarray) -> np.ndarray:
    return _reshuffle(np.asarray(J))


def kraus_from_choi(J, cutoff: float = 1e-14) -> tuple[np.ndarray, ...]:
    """Kraus operators of a completely positive map from its (PSD) Choi matrix."""
    J = mc.as_matrix(J, square=True)
    d = math.isqrt(J.shape[0])
    w, V = mc.eig_hermitian(J)
    ops = []
    for lam, v in zip(w, V.T):
        if lam > cutoff:
            ops.append(math.sqrt(lam) * v.reshape(d, d))
    return tuple(ops)


def _left_right(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # kron(A, I) + kron(I, B) without np.kron's per-call overhead.
    d = A.shape[0]
    ident = np.eye(d)
    out = A[:, None, :, None] * ident[None, :, None, :] + ident[:, None, :, None] * B[None, :, None, :]
    return out.reshape(d * d, d * d)


def generator_matrix(H: np.ndarray, dissipator: np.ndarray) -> np.ndarray:
    """Generator superoperator from a Hamiltonian and a CP map given as a superoperator.

    ``Phi^*(I)`` is read off the dissipator directly, which avoids an
    eigen-decomposition when the map comes from a Choi matrix.
    """
    d = H.shape[0]
    # Phi^*(I)_{ji} = Tr Phi(|i><j|) = sum_a S[(a,a),(i,j)]
    K = np.trace(dissipator.reshape(d, d, d, d), axis1=0, axis2=1).T
    A = -1j * H - 0.5 * K
    return dissipator + _left_right(A, np.conj(A))


def build_generator(L: Lindbladian) -> Superoperator:
    d = L.dim
    if L.kraus_ops:
        dissipator = Superoperator.from_kraus(L.kraus_ops).matrix
    else:
        dissipator = np.zeros((d * d, d * d), dtype=complex)
    return Superoperator(generator_matrix(L.hamiltonian, dissipator))


@dataclass(frozen=True)
class GKLSReport:
    passed: bool
    mode: str
    trace_error: float
    min_choi_eigenvalue: float
    messages: tuple = ()


def validate_gkls(S, mode: str = "channel") -> GKLSReport:
    """Check a superoperator as a GKLS generator or as a CPTP channel.

    Generator mode tests the left null vector ``vec(I)`` and complete
    positivity of ``exp(1e-6 * L)``; channel mode tests trace preservation
    and positivity of the Choi matrix.
    """
    M = S.matrix if isinstance(S, Superoperator) else mc.as_matrix(S, square=True)
    d = math.isqrt(M.shape[0])
    if d * d != M.shape[0]:
        raise DimensionError("superoperator size is not a perfect square")
    vec_id = mc.vec(np.eye(d))
    messages = []
    if mode == "generator":
        trace_err = float(np.max(np.abs(vec_id @ M)))
        trace_ok = trace_err <= GENERATOR_TOL * max(1.0, float(np.max(np.abs(M))))
        probe = mc.expm(M * CP_PROBE_TIME)
        w, _ = mc.eig_hermitian(0.5 * (choi_from_superop(probe) + mc.dagger(choi_from_superop(probe))))
    elif mode == "channel":
        trace_err = float(np.max(np.abs(vec_id @ M - vec_id)))
        trace_ok = trace_err <= CHANNEL_TOL
        J = choi_from_superop(M)
        if mc.hermiticity_error(J) > CHANNEL_TOL:
            messages.append("Choi matrix is not Hermitian")
        w, _ = mc.eig_hermitian(0.5 * (J + mc.dagger(J)))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    min_eig = float(w[0])
    if not trace_ok:
        messages.append(f"trace preservation violated by {trace_err:.3e}")
    if min_eig < -CHANNEL_TOL:
        messages.append(f"Choi matrix has negative eigenvalue {min_eig:.3e}")
    return GKLSReport(not messages, mode, trace_err, min_eig, tuple(messages))


def channel_at(L, t: float) -> Superoperator:
    """The channel ``exp(L t)``; ``L`` may be a Lindbladian or a generator Superoperator."""
    if t < 0:
        raise DomainError(f"time must be non-negative, got {t}")
    G = build_generator(L) if isinstance(L, Lindbladian) else L
    return Superoperator(mc.expm(G.matrix * t))


def action_matrix(S: np.ndarray) -> np.ndarray:
    """``T[i, j] = <i| E(|j><j|) |i>`` read straight from the superoperator."""
    d = math.isqrt(S.shape[0])
    diag = np.arange(d) * (d + 1)
    return np.real(S[np.ix_(diag, diag)])


def classical_action(S: Superoperator, check: bool = True) -> StochasticMatrix:
    if check:
        report = validate_gkls(S, "channel")
        if not report.passed:
            raise ContractViolation("not a valid channel: " + "; ".join(report.messages))
    return StochasticMatrix(action_matrix(S.matrix), CHANNEL_TOL)


def validate_rate_matrix(L_cl, tol: float = GENERATOR_TOL) -> np.ndarray:
    R = np.asarray(L_cl, dtype=float)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValidationError(f"rate matrix must be square, got shape {R.shape}")
    off = R - np.diag(np.diag(R))
    if np.any(off < -tol):
        raise ValidationError("rate matrix has negative off-diagonal entries")
    sums = R.sum(axis=0)
    if np.any(np.abs(sums) > tol * max(1.0, float(np.max(np.abs(R))))):
        raise ValidationError(f"rate matrix columns must sum to zero, got {sums.tolist()}")
    return R


def lift_classical(L_cl) -> Lindbladian:
    """Lindbladian with no Hamiltonian and jumps ``sqrt(L_ij) |i><j|``."""
    R = validate_rate_matrix(L_cl)
    d = R.shape[0]
    ops = []
    for i in range(d):
        for j in range(d):
            if i != j and R[i, j] > 0:
                A = np.zeros((d, d), dtype=complex)
                A[i, j] = math.sqrt(R[i, j])
                ops.append(A)
    return Lindbladian(np.zeros((d, d), dtype=complex), tuple(ops))


def hamiltonian_from_unitary(U) -> Lindbladian:
    """Hamiltonian ``H = i log U`` (principal branch) so that ``exp(-iH) = U``.

    Eigenphases are taken in ``(-pi, pi]``; a phase numerically at ``-pi`` is
    moved to ``+pi``.
    """
    U = mc.as_matrix(U, square=True)
    d = U.shape[0]
    if np.max(np.abs(mc.dagger(U) @ U - np.eye(d))) > GENERATOR_TOL:
        raise ContractViolation("matrix is not unitary")
    vals, V = mc.eig_unitary(U)
    phases = np.angle(vals)
    phases = np.where(phases <= -math.pi + 1e-12, math.pi, phases)
    H = -(V * phases) @ mc.dagger(V)
    return Lindbladian(0.5 * (H + mc.dagger(H)))


def theorem3_generator(L_R: Lindbladian, column_map: dict, gamma: float = THEOREM3_GAMMA) -> Lindbladian:
    """Generator for a target whose extra columns copy columns of an embeddable block.

    ``L_R`` must act only on the levels ``0..d'-1``; ``column_map`` sends each
    level ``j >= d'`` to the level ``i_j < d'`` whose column it copies. The
    result adds strong jumps ``sqrt(gamma) |i_j><j|`` that empty level ``j``
    into ``i_j`` at the start of the evolution.
    """
    if gamma <= 0:
        raise DomainError("gamma must be positive")
    d = L_R.dim
    if not column_map:
        return L_R
    d_prime = d - len(column_map)
    if sorted(column_map) != list(range(d_prime, d)):
        raise ValidationError(f"column_map must cover exactly the levels {d_prime}..{d - 1}")
    for j, i in column_map.items():
        if not 0 <= i < d_prime:
            raise ValidationError(f"level {j} must copy a column inside the block, got {i}")
    outside = np.zeros(d, dtype=bool)
    outside[d_prime:] = True
    tol = GENERATOR_TOL
    if np.any(np.abs(L_R.hamiltonian[outside, :]) > tol) or np.any(np.abs(L_R.hamiltonian[:, outside]) > tol):
        raise ValidationError("L_R Hamiltonian acts outside its block")
    for A in L_R.kraus_ops:
        if np.any(np.abs(A[outside, :]) > tol) or np.any(np.abs(A[:, outside]) > tol):
            raise ValidationError("L_R Kraus operator acts outside its block")
    root = math.sqrt(gamma)
    jumps = []
    for j, i in sorted(column_map.items()):
        A = np.zeros((d, d), dtype=complex)
        A[i, j] = root
        jumps.append(A)
    return Lindbladian(L_R.hamiltonian, L_R.kraus_ops + tuple(jumps))


def embed_block(L: Lindbladian, d: int) -> Lindbladian:
    """Place a Lindbladian on levels ``0..L.dim-1`` of a ``d``-level system."""
    if d < L.dim:
        raise DimensionError("target dimension is smaller than the block")

    def pad(M):
        out = np.zeros((d, d), dtype=complex)
        out[: L.dim, : L.dim] = M
        return out

    return Lindbladian(pad(L.hamiltonian), tuple(pad(A) for A in L.kraus_ops))


def max_abs_mismatch(T: StochasticMatrix, L: Lindbladian, t: float) -> float:
    """Embedding error ``max_ij |T_ij - <i|exp(L t)(|j><j|)|i>|``."""
    S = channel_at(L, t)
    return float(np.max(np.abs(T.entries - action_matrix(S.matrix))))
