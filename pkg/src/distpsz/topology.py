"""Network structure for the distributed controllers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

ALPHA_POLICIES = ("normalized", "paper-literal")


@dataclass(frozen=True)
class Topology:
    """Self-inclusive, symmetric neighbourhoods with combination weights.

    ``neighbors[m]`` is an ascending tuple of node indices that always
    contains ``m``.  ``alpha[(m, l)]`` is the weight node ``l`` applies to
    node ``m``'s estimate of filter ``l``; it is defined exactly for the
    pairs with ``m in neighbors[l]``.
    """

    L: int
    neighbors: tuple
    alpha: dict
    policy: str = "normalized"

    def __post_init__(self):
        if len(self.neighbors) != self.L:
            raise ConfigError("one neighbourhood per node required")
        for m, nb in enumerate(self.neighbors):
            if m not in nb:
                raise ConfigError(f"node {m} is missing from its own neighbourhood")
            if list(nb) != sorted(set(nb)):
                raise ConfigError(f"neighbourhood of node {m} must be ascending and unique")
            for l in nb:
                if not 0 <= l < self.L:
                    raise ConfigError(f"node index {l} out of range")
                if m not in self.neighbors[l]:
                    raise ConfigError(f"asymmetric link {m}-{l}")
        expected = {(m, l) for l in range(self.L) for m in self.neighbors[l]}
        if set(self.alpha) != expected:
            raise ConfigError("alpha must be defined exactly on neighbouring pairs")
        for v in self.alpha.values():
            if not (np.isfinite(v) and v >= 0):
                raise ConfigError("combination coefficients must be finite and non-negative")

    def size(self, m: int) -> int:
        return len(self.neighbors[m])

    def comm_pairs(self) -> int:
        """``sum_m (|N_m| - 1)``: directed links used by one combine step."""
        return sum(len(nb) - 1 for nb in self.neighbors)

    def adjacency(self) -> np.ndarray:
        A = np.zeros((self.L, self.L), dtype=bool)
        for m, nb in enumerate(self.neighbors):
            A[m, list(nb)] = True
        return A

    def alpha_matrix(self) -> np.ndarray:
        """Dense ``A[m, l] = alpha_{ml}`` (zero off-neighbourhood)."""
        A = np.zeros((self.L, self.L))
        for (m, l), v in self.alpha.items():
            A[m, l] = v
        return A

    def edges(self) -> list:
        return [(m, l) for m, nb in enumerate(self.neighbors) for l in nb if m < l]


def _alpha_for(neighbors, policy: str) -> dict:
    if policy == "normalized":
        return {(m, l): 1.0 / len(nb) for l, nb in enumerate(neighbors) for m in nb}
    if policy == "paper-literal":
        return {(m, l): 1.0 for l, nb in enumerate(neighbors) for m in nb}
    raise ConfigError(f"unknown alpha policy {policy!r}; expected one of {ALPHA_POLICIES}")


def from_adjacency(matrix, policy: str = "normalized") -> Topology:
    A = np.array(matrix, dtype=bool)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ConfigError(f"adjacency must be a non-empty square matrix, got {A.shape}")
    if not np.array_equal(A, A.T):
        raise ConfigError("adjacency matrix must be symmetric")
    np.fill_diagonal(A, True)
    neighbors = tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in A)
    return Topology(A.shape[0], neighbors, _alpha_for(neighbors, policy), policy)


def from_edges(L: int, edges, policy: str = "normalized") -> Topology:
    A = np.zeros((L, L), dtype=bool)
    for a, b in edges:
        if not (0 <= a < L and 0 <= b < L):
            raise ConfigError(f"edge {a}-{b} out of range for L={L}")
        A[a, b] = A[b, a] = True
    return from_adjacency(A, policy)


def ring(L: int, policy: str = "normalized") -> Topology:
    if L < 3:
        raise ConfigError(f"ring needs L >= 3, got {L}")
    return from_edges(L, [(m, (m + 1) % L) for m in range(L)], policy)


def line(L: int, policy: str = "normalized") -> Topology:
    if L < 1:
        raise ConfigError("line needs L >= 1")
    return from_edges(L, [(m, m + 1) for m in range(L - 1)], policy)


def full(L: int, policy: str = "normalized") -> Topology:
    if L < 1:
        raise ConfigError("full needs L >= 1")
    return from_adjacency(np.ones((L, L), dtype=bool), policy)


NAMED = {"ring": ring, "full": full, "line": line}
