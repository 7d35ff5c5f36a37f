"""Column-stochastic matrices and the classical side of the embedding problem.

Convention: ``T[i, j]`` is the probability of the transition ``j -> i``, so every
column sums to one. Indices are 0-based throughout the API.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, ResourceGuardError, UnsupportedDimension, ValidationError

DEFAULT_TOL = 1e-9
EXTREME_ENUM_MAX_D = 8
THEOREM2_MAX_D = 12
# Rate used for the rank-one closure witness; exp(-40) is below double precision.
CLOSURE_RATE = 40.0


@dataclass(frozen=True, eq=False)
class StochasticMatrix:
    entries: np.ndarray
    tolerance: float = DEFAULT_TOL

    def __post_init__(self):
        T = np.array(self.entries, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 1:
            raise ValidationError(f"stochastic matrix must be square and non-empty, got shape {T.shape}")
        if not np.all(np.isfinite(T)):
            raise ValidationError("stochastic matrix has non-finite entries")
        tol = self.tolerance
        bad = np.argwhere((T < -tol) | (T > 1 + tol))
        if len(bad):
            i, j = bad[0]
            raise ValidationError(f"entry ({i}, {j}) = {T[i, j]!r} lies outside [0, 1]")
        sums = T.sum(axis=0)
        for j, s in enumerate(sums):
            if abs(s - 1.0) > tol:
                raise ValidationError(f"column {j} sums to {s!r}, not 1")
        T = np.clip(T, 0.0, 1.0)
        T.setflags(write=False)
        object.__setattr__(self, "entries", T)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]

    def __eq__(self, other):
        if not isinstance(other, StochasticMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash(self.entries.tobytes())

    def __repr__(self):
        return f"StochasticMatrix({self.entries.tolist()!r})"

    @classmethod
    def from_ab(cls, a: float, b: float, tolerance: float = DEFAULT_TOL) -> "StochasticMatrix":
        """The 2x2 matrix ``[[a, 1-b], [1-a, b]]``."""
        return cls(np.array([[a, 1.0 - b], [1.0 - a, b]]), tolerance)

    @classmethod
    def from_map(cls, images) -> "StochasticMatrix":
        """Extreme matrix sending column ``j`` to state ``images[j]``."""
        d = len(images)
        T = np.zeros((d, d))
        T[list(images), range(d)] = 1.0
        return cls(T)

    def ab(self) -> tuple[float, float]:
        if self.dim != 2:
            raise UnsupportedDimension("(a, b) coordinates exist only for d = 2")
        return float(self.entries[0, 0]), float(self.entries[1, 1])

    def is_one(self, i: int, j: int) -> bool:
        return self.entries[i, j] >= 1.0 - self.tolerance

    def is_extreme(self) -> bool:
        T = self.entries
        tol = self.tolerance
        return bool(np.all((T <= tol) | (T >= 1.0 - tol)))

    def column_map(self) -> tuple[int, ...]:
        """Images of an extreme matrix viewed as a function on states."""
        if not self.is_extreme():
            raise ContractViolation("matrix is not extreme (entries must be 0 or 1)")
        return tuple(int(i) for i in np.argmax(self.entries, axis=0))


def validate(entries, dim: int | None = None, tolerance: float = DEFAULT_TOL) -> StochasticMatrix:
    """Build a StochasticMatrix from nested lists or a flat row-major list."""
    arr = np.asarray(entries, dtype=float)
    if dim is not None:
        if dim < 1:
            raise ValidationError("dim must be at least 1")
        if arr.size != dim * dim:
            raise ValidationError(f"expected {dim * dim} entries for d = {dim}, got {arr.size}")
        arr = arr.reshape(dim, dim)
    return StochasticMatrix(arr, tolerance)


@dataclass(frozen=True)
class ConditionResult:
    passed: bool
    diag_product: float
    det: float
    reason: str = ""


def necessary_classical_condition(T: StochasticMatrix, slack: float = 1e-12) -> ConditionResult:
    """Check ``prod_i T_ii >= det T >= 0``, necessary for classical embeddability."""
    M = T.entries
    prod = float(np.prod(np.diag(M)))
    det = float(np.linalg.det(M))
    if det < -slack:
        return ConditionResult(False, prod, det, f"det T = {det:.6g} < 0")
    if det > prod + slack:
        return ConditionResult(False, prod, det, f"det T = {det:.6g} exceeds prod T_ii = {prod:.6g}")
    return ConditionResult(True, prod, det)


@dataclass(frozen=True)
class ClassicalEmbedding:
    embeddable: bool
    generator: np.ndarray | None = None
    time: float = 1.0
    closure_point: bool = False
    reason: str = ""


def classical_embeddable_2x2(T: StochasticMatrix, slack: float = 1e-12) -> ClassicalEmbedding:
    """Decide classical embeddability of a 2x2 matrix and return a rate-matrix witness.

    ``T = [[a, 1-b], [1-a, b]]`` is embeddable iff ``a + b >= 1``. Points on
    ``a + b = 1`` are rank one and only reachable as limits; for them the
    witness is a large-rate generator whose exponential matches to double
    precision, and ``closure_point`` is set.
    """
    if T.dim != 2:
        raise UnsupportedDimension("classical_embeddable_2x2 requires d = 2")
    a, b = T.ab()
    s = a + b - 1.0
    if s < -slack:
        return ClassicalEmbedding(False, reason=f"a + b = {a + b:.6g} < 1")
    M = T.entries
    ident = np.eye(2)
    if s <= slack:
        return ClassicalEmbedding(True, CLOSURE_RATE * (M - ident), 1.0, True, "rank-one limit point")
    if s >= 1.0:
        return ClassicalEmbedding(True, np.zeros((2, 2)), 1.0)
    rate = math.log(s) / (s - 1.0)
    return ClassicalEmbedding(True, rate * (M - ident), 1.0)


def enumerate_extreme(d: int):
    """Yield all ``d**d`` extreme stochastic matrices.

    Column images form a base-``d`` counter with the last column varying fastest.
    """
    if d < 1:
        raise ValidationError("d must be at least 1")
    if d > EXTREME_ENUM_MAX_D:
        raise ResourceGuardError(f"d = {d} gives {d}**{d} matrices; limit is d <= {EXTREME_ENUM_MAX_D}")
    for images in itertools.product(range(d), repeat=d):
        yield StochasticMatrix.from_map(images)


def _cycle_structure(images) -> tuple[frozenset, list[tuple[int, ...]]]:
    d = len(images)
    core: set[int] = set()
    cycles = []
    for start in range(d):
        seen = []
        j = start
        while j not in seen and j not in core:
            seen.append(j)
            j = images[j]
        if j in seen:
            cyc = tuple(seen[seen.index(j):])
            core.update(cyc)
            cycles.append(cyc)
    return frozenset(core), cycles


@dataclass(frozen=True)
class ExtremeClassification:
    is_extreme: bool
    core: frozenset
    tails: dict
    embeddable: bool
    obstruction: tuple[int, tuple[int, ...]] | None = None
    cycles: tuple = field(default=())

    @property
    def verdict(self) -> str:
        return "embeddable" if self.embeddable else "not-embeddable"


def classify_extreme(T: StochasticMatrix) -> ExtremeClassification:
    """Classify an extreme matrix through its functional graph.

    Embeddable iff every state off the cycles maps straight onto a cycle. When
    some state needs two or more steps, ``obstruction`` holds the cycle state
    reached and the path leading to it.
    """
    images = T.column_map()
    core, cycles = _cycle_structure(images)
    tails = {j: images[j] for j in range(len(images)) if j not in core}
    obstruction = None
    for j in sorted(tails):
        if images[j] in core:
            continue
        path = [j]
        while path[-1] not in core:
            path.append(images[path[-1]])
        obstruction = (path[-1], tuple(path))
        break
    return ExtremeClassification(
        is_extreme=True,
        core=core,
        tails=tails,
        embeddable=obstruction is None,
        obstruction=obstruction,
        cycles=tuple(cycles),
    )


def count_quantum_embeddable_extreme(d: int) -> int:
    """Number of quantum-embeddable extreme ``d x d`` matrices, exact."""
    if d < 1:
        raise ValidationError("d must be at least 1")
    return sum(math.comb(d, m) * math.factorial(m) * m ** (d - m) for m in range(1, d + 1))


@dataclass(frozen=True)
class Theorem2Certificate:
    """Structural witness that ``T`` is not quantum-embeddable.

    ``I0`` is invariantly permuted by ``T``, each ``i1`` in ``I1`` is sent to
    ``i0`` with certainty, and column ``witness_i`` is fully supported on ``I1``.
    """

    I0: tuple[int, ...]
    permutation_on_I0: dict
    i0: int
    I1: tuple[int, ...]
    witness_i: int

    def verify(self, T: StochasticMatrix) -> list[str]:
        """Return the list of failed checks; empty means the certificate holds."""
        problems = []
        I0 = set(self.I0)
        for j in self.I0:
            img = self.permutation_on_I0.get(j)
            if img not in I0 or not T.is_one(img, j):
                problems.append(f"column {j} does not map into I0 deterministically")
        if sorted(self.permutation_on_I0.values()) != sorted(self.I0):
            problems.append("map on I0 is not a permutation")
        if self.i0 not in I0:
            problems.append("i0 is not in I0")
        if I0 & set(self.I1):
            problems.append("I1 intersects I0")
        for i1 in self.I1:
            if not T.is_one(self.i0, i1):
                problems.append(f"T[{self.i0}, {i1}] != 1")
        if self.witness_i in I0 or self.witness_i in self.I1:
            problems.append("witness index lies in I0 or I1")
        mass = float(sum(T[i1, self.witness_i] for i1 in self.I1))
        if mass < 1.0 - T.tolerance * max(1, len(self.I1)):
            problems.append(f"column {self.witness_i} has mass {mass:.6g} on I1")
        return problems

    def to_dict(self) -> dict:
        return {
            "I0": list(self.I0),
            "permutation_on_I0": {str(k): v for k, v in self.permutation_on_I0.items()},
            "i0": self.i0,
            "I1": list(self.I1),
            "witness_i": self.witness_i,
        }


def deterministic_cycles(T: StochasticMatrix):
    """Cycles of the partial map defined by columns that are 0/1."""
    d = T.dim
    image = {}
    for j in range(d):
        hits = [i for i in range(d) if T.is_one(i, j)]
        if hits:
            image[j] = hits[0]
    cycles = []
    done: set[int] = set()
    for start in sorted(image):
        path = []
        j = start
        while j in image and j not in path and j not in done:
            path.append(j)
            j = image[j]
        if j in path:
            cycles.append(tuple(path[path.index(j):]))
        done.update(path)
    return cycles, image


def theorem2_detect(T: StochasticMatrix) -> Theorem2Certificate | None:
    """Search for the structure that rules out quantum embeddability.

    ``I0`` ranges over unions of deterministic cycles (smallest first), ``i0``
    over ``I0``, and the witness column over states outside ``I0``. For a
    given witness the largest admissible ``I1`` is every state outside ``I0``
    (other than the witness) sent to ``i0`` with certainty.
    """
    d = T.dim
    if d > THEOREM2_MAX_D:
        raise ResourceGuardError(f"theorem2_detect is limited to d <= {THEOREM2_MAX_D}")
    cycles, image = deterministic_cycles(T)
    tol = T.tolerance
    for r in range(1, len(cycles) + 1):
        for combo in itertools.combinations(cycles, r):
            I0 = tuple(sorted(itertools.chain.from_iterable(combo)))
            in0 = set(I0)
            perm = {j: image[j] for j in I0}
            for i0 in I0:
                collapsing = [j for j in range(d) if j not in in0 and T.is_one(i0, j)]
                for i in range(d):
                    if i in in0:
                        continue
                    I1 = tuple(j for j in collapsing if j != i)
                    if not I1:
                        continue
                    mass = float(sum(T[i1, i] for i1 in I1))
                    if mass >= 1.0 - tol * len(I1):
                        return Theorem2Certificate(I0, perm, i0, I1, i)
    return None
