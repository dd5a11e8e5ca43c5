import math

import numpy as np
import pytest

from asa.exceptions import (
    NonHyperbolicException,
    NotSturmPermutationException,
    PermutationAmbiguityException,
)
from asa.executor import ThreadPoolMapExecutor
from asa.model import expected_morse_indices, expected_permutation
from asa.objects.combinatorics import SturmPermutation
from asa.objects.grid import GridFunction
from asa.permutation import (
    build_permutation,
    morse_from_permutation,
    near_tangencies,
    permutation_from_roots,
    zero_number,
    zero_number_table,
)
from tests.helpers import ci_like_records, make_record


class TestPermutation:
    def test_from_roots(self):
        # d order -1, -0.8, 0, 0.8, 1; the first-mode profiles swap at the south pole
        roots = [(-1.0, -1.0), (-0.8, 0.8), (0.0, 0.0), (0.8, -0.8), (1.0, 1.0)]
        assert permutation_from_roots(roots).sigma == [1, 4, 3, 2, 5]

    def test_input_order_is_irrelevant(self):
        roots = [(1.0, 1.0), (0.8, -0.8), (-1.0, -1.0), (0.0, 0.0), (-0.8, 0.8)]
        assert permutation_from_roots(roots).sigma == [1, 4, 3, 2, 5]

    def test_empty(self):
        assert permutation_from_roots([]).sigma == []

    def test_ambiguous(self):
        roots = [(-1.0, -1.0), (0.0, 0.5), (1e-9, 0.0), (1.0, 1.0)]
        with pytest.raises(PermutationAmbiguityException) as excinfo:
            permutation_from_roots(roots, merge_tol=1e-6)
        assert excinfo.value.offenders == [(2, 3)]

    def test_build_permutation(self):
        assert build_permutation(ci_like_records()).sigma == [1, 4, 3, 2, 5]

    def test_build_permutation_non_hyperbolic(self):
        records = ci_like_records()
        records[2] = make_record(3, np.zeros(65), 2, hyperbolic=False)
        with pytest.raises(NonHyperbolicException):
            build_permutation(records)


class TestMorseFromPermutation:
    @pytest.mark.parametrize("lmbda", [1.0, 3.0, 7.0, 13.0, 20.5])
    def test_chafee_infante_permutations(self, lmbda):
        assert morse_from_permutation(expected_permutation(lmbda)) == expected_morse_indices(
            lmbda
        )

    def test_example(self):
        assert morse_from_permutation(SturmPermutation([1, 4, 3, 2, 5])) == [0, 1, 2, 1, 0]

    def test_single(self):
        assert morse_from_permutation(SturmPermutation([1])) == [0]

    def test_not_dissipative(self):
        with pytest.raises(NotSturmPermutationException):
            morse_from_permutation(SturmPermutation([2, 1, 3]))

    def test_negative_index(self):
        # i = 0, 1, 0, -1: not a Sturm permutation
        with pytest.raises(NotSturmPermutationException):
            morse_from_permutation(SturmPermutation([1, 2, 4, 3, 5]))


class TestZeroNumber:
    @pytest.mark.parametrize(
        ("values", "expected"),
        [
            ([1.0, 2.0, 3.0], 0),
            ([1.0, -1.0], 1),
            ([1.0, 0.0, -1.0], 1),
            ([1.0, 0.0, 1.0], 0),
            ([-1.0, 1.0, -1.0, 1.0], 3),
            ([0.0, 0.0, 0.0], -1),
        ],
    )
    def test_sign_changes(self, values, expected):
        assert zero_number(values) == expected

    def test_threshold_is_relative(self):
        values = [1.0, -1e-4, 1.0]
        assert zero_number(values) == 2
        assert zero_number(values, zero_eps=1e-9, scale=1e6) == 0

    def test_grid_function(self):
        g = GridFunction.from_function(lambda t: np.cos(2 * t), 64)
        assert zero_number(g) == 2

    def test_near_tangencies(self):
        theta = np.linspace(0.0, math.pi, 65)
        touching = (theta - theta[32]) ** 2
        assert near_tangencies(touching).tolist() == [32]
        assert near_tangencies(np.cos(theta)).tolist() == []


class TestZeroNumberTable:
    def test_ci_like(self):
        table = zero_number_table(ci_like_records())
        assert table.n == 5
        assert table(2, 3) == table(3, 2) == 1
        assert table(2, 4) == 1
        assert table(3, 4) == 1
        for k in (2, 3, 4, 5):
            assert table(1, k) == 0
        for k in (1, 2, 3, 4):
            assert table(5, k) == 0
        assert table(1, 1) == -1
        assert table.flagged == frozenset()

    def test_threaded_matches_serial(self):
        records = ci_like_records()
        assert zero_number_table(records, executor=ThreadPoolMapExecutor(3)) == zero_number_table(
            records
        )

    def test_labels_must_be_contiguous(self):
        records = ci_like_records()[:4]
        records[3] = make_record(7, np.ones(65), 0)
        with pytest.raises(ValueError):
            zero_number_table(records)

    def test_unresolved_tangency_is_flagged(self):
        theta = np.linspace(0.0, math.pi, 65)
        bump = 1.0 + (theta - theta[32]) ** 2
        records = [
            make_record(1, np.ones(65), 0),
            make_record(2, bump, 0),
            make_record(3, np.full(65, 2.0), 1),
        ]
        table = zero_number_table(records)
        assert table.is_flagged(1, 2)
        assert not table.is_flagged(1, 3)
