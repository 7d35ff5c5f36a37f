import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedlab import matcore as mc
from embedlab.errors import ContractViolation, ResourceGuardError, UnsupportedDimension, ValidationError
from embedlab.stochastic import (
    StochasticMatrix,
    classical_embeddable_2x2,
    classify_extreme,
    count_quantum_embeddable_extreme,
    deterministic_cycles,
    enumerate_extreme,
    necessary_classical_condition,
    theorem2_detect,
    validate,
)

D3_NON_EMBEDDABLE = [
    [[1, 1, 0], [0, 0, 1], [0, 0, 0]],
    [[1, 0, 1], [0, 0, 0], [0, 1, 0]],
    [[0, 0, 1], [1, 1, 0], [0, 0, 0]],
    [[0, 0, 0], [0, 1, 1], [1, 0, 0]],
    [[0, 1, 0], [0, 0, 0], [1, 0, 1]],
    [[0, 0, 0], [1, 0, 0], [0, 1, 1]],
]


def copied_chain_family(p):
    q = 1 - p
    return [
        [[1, 1, 1, 0], [0, 0, 0, p], [0, 0, 0, q], [0, 0, 0, 0]],
        [[1, 1, 0, 1], [0, 0, p, 0], [0, 0, 0, 0], [0, 0, q, 0]],
        [[1, 0, 1, 1], [0, 0, 0, 0], [0, p, 0, 0], [0, q, 0, 0]],
    ]


class TestValidate:
    def test_identity(self):
        T = validate(np.eye(3))
        assert T.dim == 3

    def test_bad_column_named(self):
        with pytest.raises(ValidationError, match="column 1"):
            validate([[0.5, 0.6], [0.5, 0.5]])

    def test_negative_entry(self):
        with pytest.raises(ValidationError):
            validate([[1.2, 0.0], [-0.2, 1.0]])

    def test_flat_with_dim(self):
        T = validate([0.7, 0.2, 0.3, 0.8], dim=2)
        assert T.ab() == (0.7, 0.8)
        with pytest.raises(ValidationError):
            validate([1, 0, 0], dim=2)

    def test_d3_listed_matrices_valid(self):
        for M in D3_NON_EMBEDDABLE:
            assert validate(M).is_extreme()

    def test_clamps_within_tolerance(self):
        T = validate([[1 + 1e-11, 0.0], [-1e-11, 1.0]])
        assert T.entries.min() >= 0 and T.entries.max() <= 1

    def test_read_only_and_hashable(self):
        T = StochasticMatrix.from_ab(0.3, 0.4)
        with pytest.raises(ValueError):
            T.entries[0, 0] = 1
        assert T == StochasticMatrix.from_ab(0.3, 0.4)
        assert len({T, StochasticMatrix.from_ab(0.3, 0.4)}) == 1

    def test_from_map(self):
        T = StochasticMatrix.from_map([1, 0, 0])
        assert T.column_map() == (1, 0, 0)
        np.testing.assert_array_equal(T.entries, [[0, 1, 1], [1, 0, 0], [0, 0, 0]])


class TestNecessaryCondition:
    def test_identity(self):
        assert necessary_classical_condition(StochasticMatrix(np.eye(2))).passed

    def test_swap_fails_on_det(self):
        res = necessary_classical_condition(StochasticMatrix.from_ab(0, 0))
        assert not res.passed and "det" in res.reason and res.det == pytest.approx(-1)

    def test_singular(self):
        res = necessary_classical_condition(StochasticMatrix.from_ab(0.5, 0.5))
        assert res.passed and res.diag_product == pytest.approx(0.25)


class TestClassical2x2:
    def test_identity(self):
        emb = classical_embeddable_2x2(StochasticMatrix(np.eye(2)))
        assert emb.embeddable and not np.any(emb.generator)

    def test_swap_not_embeddable(self):
        assert not classical_embeddable_2x2(StochasticMatrix.from_ab(0, 0)).embeddable

    def test_swap_not_reached_by_rate_matrices(self):
        # Coarse sweep over 2x2 rate matrices never gets near the swap.
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        best = math.inf
        for x in np.linspace(0, 50, 26):
            for y in np.linspace(0, 50, 26):
                L = np.array([[-x, y], [x, -y]])
                for t in np.linspace(0, 10, 11):
                    best = min(best, np.max(np.abs(mc.expm(L * t).real - swap)))
        assert best > 0.05

    def test_round_trip(self):
        T = StochasticMatrix.from_ab(0.7, 0.8)
        emb = classical_embeddable_2x2(T)
        assert emb.embeddable and not emb.closure_point
        np.testing.assert_allclose(mc.expm(emb.generator).real, T.entries, atol=1e-10)

    def test_closure_point(self):
        T = StochasticMatrix.from_ab(0.3, 0.7)
        emb = classical_embeddable_2x2(T)
        assert emb.embeddable and emb.closure_point
        np.testing.assert_allclose(mc.expm(emb.generator * emb.time).real, T.entries, atol=1e-12)

    def test_dimension(self):
        with pytest.raises(UnsupportedDimension):
            classical_embeddable_2x2(StochasticMatrix(np.eye(3)))

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_classical_implies_condition(self, a, b):
        T = StochasticMatrix.from_ab(a, b)
        if classical_embeddable_2x2(T).embeddable:
            assert necessary_classical_condition(T).passed


class TestExtreme:
    @pytest.mark.parametrize("d,count", [(1, 1), (2, 4), (3, 27), (4, 256)])
    def test_enumeration_size(self, d, count):
        mats = list(enumerate_extreme(d))
        assert len(mats) == count
        assert len({m.column_map() for m in mats}) == count

    def test_enumeration_order(self):
        maps = [m.column_map() for m in enumerate_extreme(2)]
        assert maps == [(0, 0), (0, 1), (1, 0), (1, 1)]

    def test_guard(self):
        with pytest.raises(ResourceGuardError):
            next(enumerate_extreme(9))

    def test_permutation_embeddable(self):
        for perm in itertools.permutations(range(4)):
            cls = classify_extreme(StochasticMatrix.from_map(perm))
            assert cls.embeddable and cls.core == frozenset(range(4))

    def test_d3_listed_not_embeddable(self):
        for M in D3_NON_EMBEDDABLE:
            cls = classify_extreme(StochasticMatrix(np.array(M, dtype=float)))
            assert not cls.embeddable
            core_state, path = cls.obstruction
            assert len(path) >= 3 and core_state in cls.core

    def test_completely_contractive(self):
        cls = classify_extreme(StochasticMatrix.from_map([0, 0, 0]))
        assert cls.embeddable and cls.core == frozenset({0}) and cls.tails == {1: 0, 2: 0}

    def test_rejects_non_extreme(self):
        with pytest.raises(ContractViolation):
            classify_extreme(StochasticMatrix.from_ab(0.5, 0.5))

    @pytest.mark.parametrize("d,n", [(1, 1), (2, 4), (3, 21), (4, 148), (5, 1305)])
    def test_count_formula(self, d, n):
        assert count_quantum_embeddable_extreme(d) == n

    @pytest.mark.parametrize("d", [2, 3, 4, 5])
    def test_count_matches_enumeration(self, d):
        assert sum(classify_extreme(T).embeddable for T in enumerate_extreme(d)) == count_quantum_embeddable_extreme(d)

    def test_relabelling_invariance(self):
        rng = np.random.default_rng(5)
        for T in enumerate_extreme(4):
            perm = rng.permutation(4)
            P = np.eye(4)[perm]
            relabelled = StochasticMatrix(P @ T.entries @ P.T)
            assert classify_extreme(relabelled).embeddable == classify_extreme(T).embeddable


class TestTheorem2:
    def test_d3_listed_first(self):
        T = StochasticMatrix(np.array(D3_NON_EMBEDDABLE[0], dtype=float))
        cert = theorem2_detect(T)
        assert cert is not None
        assert (cert.I0, cert.i0, cert.I1, cert.witness_i) == ((0,), 0, (1,), 2)
        assert cert.verify(T) == []

    def test_copied_chain_family(self):
        for M in copied_chain_family(0.5):
            T = StochasticMatrix(np.array(M, dtype=float))
            cert = theorem2_detect(T)
            assert cert is not None and cert.verify(T) == []
            assert cert.I0 == (0,) and len(cert.I1) == 2

    def test_copied_chain_first_member_certificate(self):
        cert = theorem2_detect(StochasticMatrix(np.array(copied_chain_family(0.5)[0], dtype=float)))
        assert (cert.I0, cert.I1, cert.witness_i) == ((0,), (1, 2), 3)

    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_copied_chain_edge_weights(self, p):
        T = StochasticMatrix(np.array(copied_chain_family(p)[0], dtype=float))
        assert theorem2_detect(T) is not None

    def test_identity_has_none(self):
        assert theorem2_detect(StochasticMatrix(np.eye(4))) is None

    def test_interior_has_none(self):
        assert theorem2_detect(StochasticMatrix.from_ab(0.3, 0.4)) is None

    def test_float_entries_within_tolerance(self):
        M = np.array(D3_NON_EMBEDDABLE[0], dtype=float)
        M[0, 0] -= 1e-11
        M[1, 0] += 1e-11
        assert theorem2_detect(StochasticMatrix(M)) is not None

    def test_verify_detects_tampering(self):
        T = StochasticMatrix(np.array(D3_NON_EMBEDDABLE[0], dtype=float))
        cert = theorem2_detect(T)
        assert cert.verify(StochasticMatrix(np.eye(3)))

    def test_guard(self):
        with pytest.raises(ResourceGuardError):
            theorem2_detect(StochasticMatrix(np.eye(13)))

    def test_deterministic_cycles(self):
        cycles, image = deterministic_cycles(StochasticMatrix.from_map([1, 0, 0, 3]))
        assert sorted(cycles) == [(0, 1), (3,)]
        assert image == {0: 1, 1: 0, 2: 0, 3: 3}

    def test_to_dict(self):
        cert = theorem2_detect(StochasticMatrix(np.array(D3_NON_EMBEDDABLE[0], dtype=float)))
        assert cert.to_dict() == {"I0": [0], "permutation_on_I0": {"0": 0}, "i0": 0, "I1": [1], "witness_i": 2}
