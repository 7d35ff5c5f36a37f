"""Closed-form embedding witnesses for stochastic matrices.

Each builder returns a :class:`Witness`: a Lindbladian, an evolution time and
the embedding error it achieves against the target. Builders raise
``ValidationError`` when the target lacks the structure they need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDimension, ValidationError
from .lindblad import (
    THEOREM3_GAMMA,
    THEOREM3_TF,
    Lindbladian,
    embed_block,
    hamiltonian_from_unitary,
    lift_classical,
    max_abs_mismatch,
    theorem3_generator,
)
from .stochastic import StochasticMatrix, classical_embeddable_2x2

STRUCTURE_TOL = 1e-12


@dataclass(frozen=True)
class Witness:
    method: str
    lindbladian: Lindbladian
    t: float
    objective: float
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "lindbladian": self.lindbladian.to_dict(),
            "t": self.t,
            "objective": self.objective,
            "note": self.note,
        }


def _finish(method: str, T: StochasticMatrix, L: Lindbladian, t: float, note: str = "") -> Witness:
    return Witness(method, L, t, max_abs_mismatch(T, L, t), note)


def rate_matrix_log(T: StochasticMatrix, tol: float = 1e-9) -> np.ndarray:
    """Principal logarithm of ``T`` if it is a valid rate matrix.

    For ``d = 2`` the closed form is used, including the rank-one limit
    points. Larger ``d`` go through an eigendecomposition, so defective or
    singular targets are rejected.
    """
    if T.dim == 2:
        emb = classical_embeddable_2x2(T)
        if not emb.embeddable:
            raise ValidationError(f"target is not classically embeddable: {emb.reason}")
        return emb.generator
    if np.allclose(T.entries, np.eye(T.dim), atol=STRUCTURE_TOL, rtol=0):
        return np.zeros((T.dim, T.dim))
    w, V = np.linalg.eig(T.entries)
    if np.min(np.abs(w)) < tol:
        raise ValidationError("target is singular, so it has no matrix logarithm")
    if np.linalg.cond(V) > 1e8:
        raise ValidationError("target is (nearly) defective; eigendecomposition log is unreliable")
    logm = V @ np.diag(np.log(w.astype(complex))) @ np.linalg.inv(V)
    if np.max(np.abs(logm.imag)) > tol:
        raise ValidationError("principal logarithm of the target is not real")
    R = logm.real
    off = R - np.diag(np.diag(R))
    if np.any(off < -tol):
        raise ValidationError("principal logarithm has negative off-diagonal rates")
    off = np.clip(off, 0.0, None)
    return off - np.diag(off.sum(axis=0))


def classical_witness(T: StochasticMatrix) -> Witness:
    """Lift the classical generator ``log T`` to a Lindbladian (time 1)."""
    return _finish("classical-lift", T, lift_classical(rate_matrix_log(T)), 1.0)


def unistochastic_unitary(T: StochasticMatrix) -> np.ndarray:
    """A unitary with ``|U_ij|^2 = T_ij`` for permutations and 2x2 doubly stochastic targets."""
    M = T.entries
    if T.is_extreme():
        images = T.column_map()
        if sorted(images) != list(range(T.dim)):
            raise ValidationError("extreme target is not a permutation, so it is not unistochastic")
        U = np.zeros((T.dim, T.dim), dtype=complex)
        U[list(images), list(range(T.dim))] = 1.0
        return U
    if T.dim != 2:
        raise UnsupportedDimension("unitary witnesses for d > 2 are only built for permutations")
    a, b = T.ab()
    if abs(a - b) > STRUCTURE_TOL:
        raise ValidationError(f"2x2 target is unistochastic only when a = b, got a = {a:.6g}, b = {b:.6g}")
    c, s = math.sqrt(M[0, 0]), math.sqrt(M[1, 0])
    return np.array([[c, -s], [s, c]], dtype=complex)


def unitary_witness(T: StochasticMatrix) -> Witness:
    """Hamiltonian dynamics reaching a unistochastic target at time 1."""
    return _finish("unitary", T, hamiltonian_from_unitary(unistochastic_unitary(T)), 1.0)


@dataclass(frozen=True)
class CopiedColumns:
    """Level ordering exposing the block form ``[R | copies of R columns]``.

    ``order`` lists the block levels first; ``column_map`` is expressed in
    the reordered indices, as :func:`theorem3_generator` expects.
    """

    order: tuple[int, ...]
    block_dim: int
    column_map: dict

    def block(self, T: StochasticMatrix) -> StochasticMatrix:
        idx = list(self.order[: self.block_dim])
        return StochasticMatrix(T.entries[np.ix_(idx, idx)], T.tolerance)


def copied_column_structure(T: StochasticMatrix) -> CopiedColumns:
    """Split the levels into a block carrying all probability and copied columns.

    Block levels are the rows with non-zero mass; every other column must
    equal the column of some block level.
    """
    M = T.entries
    tol = max(T.tolerance, STRUCTURE_TOL)
    block = [i for i in range(T.dim) if np.max(M[i]) > tol]
    rest = [j for j in range(T.dim) if j not in block]
    if not rest:
        return CopiedColumns(tuple(block), len(block), {})
    order = tuple(block + rest)
    pos = {level: k for k, level in enumerate(order)}
    column_map = {}
    for j in rest:
        source = next((k for k in block if np.max(np.abs(M[:, k] - M[:, j])) <= tol), None)
        if source is None:
            raise ValidationError(f"column {j} does not copy any column of the block {block}")
        column_map[pos[j]] = pos[source]
    return CopiedColumns(order, len(block), column_map)


def _permute(L: Lindbladian, order) -> Lindbladian:
    """Relabel reordered level ``k`` back to original level ``order[k]``."""
    idx = np.asarray(order)

    def back(M):
        out = np.zeros_like(M)
        out[np.ix_(idx, idx)] = M
        return out

    return Lindbladian(back(L.hamiltonian), tuple(back(A) for A in L.kraus_ops))


def block_witness(R: StochasticMatrix) -> Witness:
    """First closed-form witness that applies to the block ``R``."""
    errors = []
    for builder in (classical_witness, unitary_witness):
        try:
            return builder(R)
        except (ValidationError, UnsupportedDimension) as exc:
            errors.append(f"{builder.__name__}: {exc}")
    raise ValidationError("block has no closed-form witness (" + "; ".join(errors) + ")")


def theorem3_witness(T: StochasticMatrix, gamma: float = THEOREM3_GAMMA, t_f: float = THEOREM3_TF) -> Witness:
    """Block witness plus strong jumps that move copied levels onto their source."""
    if t_f <= 0:
        raise ValidationError("t_f must be positive")
    cc = copied_column_structure(T)
    if not cc.column_map:
        raise ValidationError("target has no copied columns outside its block")
    inner = block_witness(cc.block(T))
    L_R = embed_block(inner.lindbladian.scaled(inner.t / t_f), T.dim)
    k = cc.block_dim
    L = _permute(theorem3_generator(L_R, cc.column_map, gamma), cc.order)
    note = f"block levels {list(cc.order[:k])} via {inner.method}, gamma = {gamma:g}"
    return _finish("theorem3", T, L, t_f, note)


def extreme_witness(T: StochasticMatrix, delta: float, gammas=(1e3, 1e4, 1e5, 1e6, 1e7, 1e8)) -> Witness:
    """Witness for an embeddable extreme matrix, raising ``gamma`` until within ``delta``."""
    if not copied_column_structure(T).column_map:
        return unitary_witness(T)
    best = None
    for gamma in gammas:
        w = theorem3_witness(T, gamma)
        if best is None or w.objective < best.objective:
            best = w
        if w.objective <= delta:
            break
    return best


METHODS = {
    "classical-lift": classical_witness,
    "unitary": unitary_witness,
    "theorem3": theorem3_witness,
}
