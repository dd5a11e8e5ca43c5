"""Sturm permutation and zero-number table."""

import numpy as np


class SturmPermutation:
    """
    Permutation relating the order of equilibria along the unstable curve to their order
    along the stable curve.

    ``sigma[m - 1]`` is the label (position along the unstable curve) of the ``m``-th
    equilibrium along the stable curve.
    """

    __slots__ = [
        "__sigma",
    ]

    def __init__(self, sigma):
        """
        :param sigma: 1-based images.
        :raises ValueError: If ``sigma`` is not a bijection of ``1..N``.
        """
        sigma = tuple(int(x) for x in sigma)
        if sorted(sigma) != list(range(1, len(sigma) + 1)):
            raise ValueError(f"{list(sigma)} is not a permutation of 1..{len(sigma)}")
        self.__sigma = sigma

    @classmethod
    def from_cycles(cls, n: int, cycles: list[tuple[int, ...]]) -> "SturmPermutation":
        """
        Build from disjoint cycles, e.g. ``from_cycles(9, [(2, 8), (4, 6)])``.
        """
        sigma = list(range(1, n + 1))
        for cycle in cycles:
            for i, x in enumerate(cycle):
                sigma[x - 1] = cycle[(i + 1) % len(cycle)]
        return cls(sigma)

    @classmethod
    def identity(cls, n: int) -> "SturmPermutation":
        return cls(range(1, n + 1))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SturmPermutation):
            raise NotImplementedError
        return self.__sigma == other.__sigma

    def __hash__(self):
        return hash(self.__sigma)

    def __repr__(self):
        return f"{self.__class__.__name__}({self.cycle_notation()})"

    def __call__(self, m: int) -> int:
        return self.__sigma[m - 1]

    def __len__(self):
        return len(self.__sigma)

    @property
    def n(self) -> int:
        return len(self.__sigma)

    @property
    def sigma(self) -> list[int]:
        return list(self.__sigma)

    def inverse(self) -> list[int]:
        """1-based images of the inverse permutation."""
        inv = [0] * self.n
        for position, label in enumerate(self.__sigma, start=1):
            inv[label - 1] = position
        return inv

    @property
    def is_dissipative_normalized(self) -> bool:
        """``σ(1) = 1`` and ``σ(N) = N``."""
        return self.n == 0 or (self.__sigma[0] == 1 and self.__sigma[-1] == self.n)

    def cycles(self) -> list[tuple[int, ...]]:
        """Non-trivial cycles, each starting at its smallest element, ordered by that element."""
        seen = set()
        cycles = []
        for start in range(1, self.n + 1):
            if start in seen:
                continue
            cycle = [start]
            seen.add(start)
            x = self(start)
            while x != start:
                cycle.append(x)
                seen.add(x)
                x = self(x)
            if len(cycle) > 1:
                cycles.append(tuple(cycle))
        return cycles

    def cycle_notation(self) -> str:
        """E.g. ``(2,8)(4,6)``; ``id`` for the identity."""
        cycles = self.cycles()
        if not cycles:
            return "id"
        return "".join("(" + ",".join(str(x) for x in c) + ")" for c in cycles)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma, "cycles": self.cycle_notation()}


class ZeroNumberTable:
    """
    Symmetric matrix of zero numbers ``z(u_j - u_k)`` indexed by 1-based labels, with
    ``-1`` on the diagonal.

    Entries computed from profiles that touch without a resolvable sign change are kept but
    flagged.
    """

    __slots__ = [
        "__z",
        "__flagged",
    ]

    def __init__(self, z, flagged: set[tuple[int, int]] | None = None):
        """
        :param z: ``N × N`` integer matrix.
        :param flagged: Label pairs with unresolved near-tangencies (either order).
        :raises ValueError: If the matrix is not symmetric with a ``-1`` diagonal.
        """
        z = np.array(z, dtype=int)
        if z.ndim != 2 or z.shape[0] != z.shape[1]:
            raise ValueError(f"Zero number table must be square, got shape {z.shape}")
        if not np.array_equal(z, z.T):
            raise ValueError("Zero number table must be symmetric")
        if np.any(np.diag(z) != -1):
            raise ValueError("Zero number table must have -1 on the diagonal")
        z.flags.writeable = False
        self.__z = z
        self.__flagged = frozenset(
            (min(j, k), max(j, k)) for j, k in (flagged if flagged else set())
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ZeroNumberTable):
            raise NotImplementedError
        return np.array_equal(self.__z, other.__z) and self.__flagged == other.__flagged

    def __hash__(self):
        return hash((self.__z.tobytes(), self.__flagged))

    def __repr__(self):
        return f"{self.__class__.__name__}(n={self.n}, flagged={sorted(self.__flagged)})"

    def __call__(self, j: int, k: int) -> int:
        """``z(u_j - u_k)`` for 1-based labels."""
        return int(self.__z[j - 1, k - 1])

    @property
    def n(self) -> int:
        return self.__z.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        return self.__z

    @property
    def flagged(self) -> frozenset[tuple[int, int]]:
        return self.__flagged

    def is_flagged(self, j: int, k: int) -> bool:
        return (min(j, k), max(j, k)) in self.__flagged

    def to_dict(self) -> dict:
        return {
            "z": self.__z.tolist(),
            "flagged": [list(pair) for pair in sorted(self.__flagged)],
        }
