import numpy as np
import pytest

from asa.objects.combinatorics import SturmPermutation, ZeroNumberTable


class TestSturmPermutation:
    def test_from_cycles(self):
        sigma = SturmPermutation.from_cycles(5, [(2, 4)])
        assert sigma.sigma == [1, 4, 3, 2, 5]
        assert sigma(2) == 4
        assert sigma.n == len(sigma) == 5
        assert sigma.cycles() == [(2, 4)]
        assert sigma.cycle_notation() == "(2,4)"
        assert sigma.is_dissipative_normalized

    def test_identity(self):
        sigma = SturmPermutation.identity(3)
        assert sigma.cycles() == []
        assert sigma.cycle_notation() == "id"
        assert sigma.to_dict() == {"sigma": [1, 2, 3], "cycles": "id"}

    def test_inverse(self):
        sigma = SturmPermutation([2, 3, 1])
        assert sigma.inverse() == [3, 1, 2]
        assert sigma.cycles() == [(1, 2, 3)]
        assert not sigma.is_dissipative_normalized

    def test_equality(self):
        assert SturmPermutation([1, 4, 3, 2, 5]) == SturmPermutation.from_cycles(5, [(4, 2)])
        assert hash(SturmPermutation([2, 1])) == hash(SturmPermutation((2, 1)))
        with pytest.raises(NotImplementedError):
            # noinspection PyStatementEffect
            SturmPermutation([1]) == [1]  # noqa: B015

    @pytest.mark.parametrize("sigma", [[1, 1], [0, 1], [1, 3], [2]])
    def test_not_a_permutation(self, sigma):
        with pytest.raises(ValueError):
            SturmPermutation(sigma)


class TestZeroNumberTable:
    MATRIX = [[-1, 0, 1], [0, -1, 2], [1, 2, -1]]

    def test_lookup(self):
        table = ZeroNumberTable(self.MATRIX, flagged={(3, 2)})
        assert table(1, 3) == 1
        assert table(3, 2) == 2
        assert table.n == 3
        assert table.is_flagged(2, 3)
        assert table.is_flagged(3, 2)
        assert not table.is_flagged(1, 2)
        assert table.flagged == frozenset({(2, 3)})
        assert table.to_dict() == {"z": self.MATRIX, "flagged": [[2, 3]]}

    def test_read_only(self):
        table = ZeroNumberTable(self.MATRIX)
        with pytest.raises(ValueError):
            table.matrix[0, 1] = 5

    @pytest.mark.parametrize(
        "matrix",
        [
            [[-1, 0], [1, -1]],
            [[0, 0], [0, -1]],
            [[-1, 0, 0]],
            np.zeros(3),
        ],
    )
    def test_invalid(self, matrix):
        with pytest.raises(ValueError):
            ZeroNumberTable(matrix)
