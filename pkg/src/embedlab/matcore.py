"""Dense complex linear algebra for small matrices.

Everything here works on plain ``numpy`` arrays. Operators are vectorised
row-wise throughout the package, i.e. ``vec(X)[i*n + j] == X[i, j]``, so that
``vec(A @ X @ B) == kron(A, B.T) @ vec(X)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, DimensionError

CONSTRUCTION_TOL = 1e-12
CONTRACT_TOL = 1e-10

# Diagonal Pade [8/8] coefficients for exp, c_k = (2m-k)! m! / ((2m)! k! (m-k)!).
_PADE_ORDER = 8
_PADE_COEFFS = tuple(
    math.factorial(2 * _PADE_ORDER - k)
    * math.factorial(_PADE_ORDER)
    / (math.factorial(2 * _PADE_ORDER) * math.factorial(k) * math.factorial(_PADE_ORDER - k))
    for k in range(_PADE_ORDER + 1)
)
_SCALED_NORM_MAX = 0.5

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_matrix(M, square: bool = False) -> np.ndarray:
    """Coerce ``M`` to a finite 2-D complex array."""
    A = np.asarray(M, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ContractViolation("matrix has non-finite entries")
    return A


def dagger(A: np.ndarray) -> np.ndarray:
    return np.conj(A).T


def hermiticity_error(M: np.ndarray) -> float:
    return float(np.max(np.abs(M - dagger(M)), initial=0.0))


def expm(M) -> np.ndarray:
    """Matrix exponential by scaling and squaring around a Pade [8/8] kernel.

    The matrix is scaled by ``2**-s`` until its 1-norm is at most 0.5, where the
    Pade truncation error is far below double precision, and the result is
    squared back ``s`` times.
    """
    A = as_matrix(M, square=True)
    n = A.shape[0]
    ident = np.eye(n, dtype=complex)
    norm = float(np.max(np.sum(np.abs(A), axis=0), initial=0.0))
    if norm == 0.0:
        return ident
    s = max(0, int(math.ceil(math.log2(norm / _SCALED_NORM_MAX))))
    A = A / (2.0 ** s)
    c = _PADE_COEFFS
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    A8 = A4 @ A4
    U = A @ (c[1] * ident + c[3] * A2 + c[5] * A4 + c[7] * A6)
    V = c[0] * ident + c[2] * A2 + c[4] * A4 + c[6] * A6 + c[8] * A8
    X = np.linalg.solve(V - U, V + U)
    for _ in range(s):
        X = X @ X
    return X


def _jacobi_sweeps(A: np.ndarray, tol: float, max_sweeps: int):
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.linalg.norm(A)))
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(A - np.diag(np.diag(A))))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = A[p, p].real
                aqq = A[q, q].real
                tau = (aqq - app) / (2.0 * r)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # G = diag-phase on q followed by a real Givens rotation on (p, q).
                g = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                A[:, idx] = A[:, idx] @ g
                A[idx, :] = dagger(g) @ A[idx, :]
                A[p, q] = 0.0
                A[q, p] = 0.0
                V[:, idx] = V[:, idx] @ g
    return A, V


def eig_hermitian(M, tol: float = 1e-13, max_sweeps: int = 100):
    """Eigen-decompose a Hermitian matrix with cyclic complex Jacobi rotations.

    Returns
    -------
    eigenvalues : ndarray of float, ascending
    eigenvectors : ndarray, unitary, columns matching ``eigenvalues``
    """
    A = as_matrix(M, square=True)
    if hermiticity_error(A) > CONTRACT_TOL * max(1.0, float(np.max(np.abs(A), initial=0.0))):
        raise ContractViolation("eig_hermitian requires a Hermitian matrix")
    A = 0.5 * (A + dagger(A))
    D, V = _jacobi_sweeps(A.copy(), tol, max_sweeps)
    w = np.real(np.diag(D)).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def hermitian_function(M, fn) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum."""
    w, V = eig_hermitian(M)
    return (V * fn(w)) @ dagger(V)


def psd_sqrt(M) -> np.ndarray:
    return hermitian_function(M, lambda w: np.sqrt(np.clip(w, 0.0, None)))


def eig_unitary(U, cluster_tol: float = 1e-8):
    """Diagonalise a unitary (or any normal) matrix using two commuting Hermitian parts.

    The Hermitian part is diagonalised first; inside each degenerate cluster
    the anti-Hermitian part is diagonalised to split the remaining freedom.
    Returns eigenvalues (complex) and a unitary eigenvector matrix.
    """
    U = as_matrix(U, square=True)
    K = 0.5 * (U + dagger(U))
    S = (U - dagger(U)) / 2j
    w, V = eig_hermitian(K)
    n = len(w)
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and w[stop] - w[stop - 1] <= cluster_tol:
            stop += 1
        if stop - start > 1:
            block = V[:, start:stop]
            sub = dagger(block) @ S @ block
            _, W = eig_hermitian(0.5 * (sub + dagger(sub)))
            V[:, start:stop] = block @ W
        start = stop
    vals = np.einsum("ij,ik,kj->j", np.conj(V), U, V)
    return vals, V


@dataclass(frozen=True)
class DensityMatrix:
    """A validated quantum state: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray

    def __post_init__(self):
        M = as_matrix(self.matrix, square=True)
        if hermiticity_error(M) > CONSTRUCTION_TOL:
            raise ContractViolation("density matrix is not Hermitian")
        if abs(np.trace(M) - 1.0) > CONSTRUCTION_TOL:
            raise ContractViolation(f"density matrix has trace {np.trace(M).real:.15g}")
        M = 0.5 * (M + dagger(M))
        w, _ = eig_hermitian(M)
        if w[0] < -CONTRACT_TOL:
            raise ContractViolation(f"density matrix has eigenvalue {w[0]:.3e}")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, psi) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, np.conj(v)))

    @classmethod
    def basis(cls, d: int, i: int) -> "DensityMatrix":
        M = np.zeros((d, d), dtype=complex)
        M[i, i] = 1.0
        return cls(M)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        return cls(np.eye(d, dtype=complex) / d)

    @classmethod
    def coerce(cls, rho) -> "DensityMatrix":
        """Accept a DensityMatrix, a state vector or a matrix; matrices are renormalised within tolerance."""
        if isinstance(rho, cls):
            return rho
        if np.ndim(rho) == 1:
            return cls.pure(rho)
        M = as_matrix(rho, square=True)
        M = 0.5 * (M + dagger(M))
        tr = np.trace(M).real
        if abs(tr - 1.0) <= 1e-9:
            M = M / tr
        return cls(M)


def _pair(rho, sigma):
    r = DensityMatrix.coerce(rho)
    s = DensityMatrix.coerce(sigma)
    if r.dim != s.dim:
        raise DimensionError(f"state dimensions differ: {r.dim} vs {s.dim}")
    return r.matrix, s.matrix


def trace_distance(rho, sigma) -> float:
    """Half the trace norm of ``rho - sigma``."""
    r, s = _pair(rho, sigma)
    w, _ = eig_hermitian(r - s)
    return float(min(1.0, 0.5 * np.sum(np.abs(w))))


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity ``(Tr|sqrt(rho) sqrt(sigma)|)**2``."""
    r, s = _pair(rho, sigma)
    sr = psd_sqrt(r)
    w, _ = eig_hermitian(sr @ s @ sr)
    root = float(np.sum(np.sqrt(np.clip(w, 0.0, None))))
    return float(min(1.0, root * root))


def mixedness(rho) -> float:
    """``sqrt(1 - Tr rho^2)``, zero exactly for pure states."""
    r = DensityMatrix.coerce(rho).matrix
    purity = float(np.real(np.trace(r @ r)))
    return math.sqrt(max(0.0, 1.0 - purity))


def concurrence_2xN(coeffs) -> float:
    """Concurrence of the pure state ``sum_ij f[i, j] |a_i>|b_j>`` with ``f`` of shape (2, N)."""
    f = np.asarray(coeffs, dtype=complex)
    if f.ndim != 2 or f.shape[0] != 2:
        raise DimensionError(f"expected coefficients of shape (2, N), got {f.shape}")
    if abs(np.linalg.norm(f) - 1.0) > CONSTRUCTION_TOL:
        raise ContractViolation("state coefficients are not normalised")
    minors = np.outer(f[0], f[1]) - np.outer(f[1], f[0])
    total = float(np.sum(np.abs(np.triu(minors, k=1)) ** 2))
    return min(1.0, 2.0 * math.sqrt(total))


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A), np.asarray(B))


def vec(X) -> np.ndarray:
    """Row-wise vectorisation."""
    X = np.asarray(X)
    if X.ndim != 2:
        raise DimensionError(f"vec expects a matrix, got shape {X.shape}")
    return X.reshape(-1).copy()


def unvec(v, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    v = np.asarray(v).ravel()
    if rows is None and cols is None:
        rows = cols = math.isqrt(v.size)
    elif rows is None:
        rows = v.size // cols
    elif cols is None:
        cols = v.size // rows
    if rows * cols != v.size:
        raise DimensionError(f"cannot reshape {v.size} entries into {rows}x{cols}")
    return v.reshape(rows, cols).copy()


def partial_trace(M, dims: tuple[int, int], trace_out: int = 1) -> np.ndarray:
    """Trace out subsystem ``trace_out`` (0 or 1) of an operator on ``dims[0] x dims[1]``."""
    M = np.asarray(M)
    dA, dB = dims
    if M.shape != (dA * dB, dA * dB):
        raise DimensionError(f"operator shape {M.shape} does not match dims {dims}")
    T = M.reshape(dA, dB, dA, dB)
    if trace_out == 1:
        return np.einsum("ijkj->ik", T)
    if trace_out == 0:
        return np.einsum("ijil->jl", T)
    raise DimensionError("trace_out must be 0 or 1")
