"""Shared domain types: count data, DAGs, candidate parent sets and run config."""
from __future__ import annotations

import enum
import heapq
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np


class LearnDagError(Exception):
    """Base class for errors raised by this package."""


class DataError(LearnDagError, ValueError):
    pass


class ConfigError(LearnDagError, ValueError):
    pass


class CycleError(LearnDagError, ValueError):
    """Raised when an edge set contains a directed cycle.

    ``cycle`` holds one offending cycle as a node list whose last node
    points back to the first.
    """

    def __init__(self, cycle: Sequence[int]):
        self.cycle = list(cycle)
        path = " -> ".join(str(v) for v in [*self.cycle, self.cycle[0]])
        super().__init__(f"directed cycle: {path}")


class CountMatrix:
    """n x p matrix of non-negative integer counts (rows are samples).

    The raw integers are kept as int64; ``values_f`` is a cached float64
    copy used by the fitting kernels, and ``log_factorials`` caches
    ``sum_i log x_ij!`` per column since it never depends on coefficients.
    """

    __slots__ = ("values", "names", "_values_f", "_logfact")

    def __init__(self, values, names: Sequence[str] | None = None):
        arr = np.asarray(values)
        if arr.ndim != 2:
            raise DataError(f"count matrix must be 2-D, got shape {arr.shape}")
        n, p = arr.shape
        if n < 1:
            raise DataError("count matrix needs at least one sample")
        if p < 2:
            raise DataError("count matrix needs at least two variables")
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)):
                raise DataError("count matrix contains non-finite values")
            if not np.all(arr == np.floor(arr)):
                bad = np.argwhere(arr != np.floor(arr))[0]
                raise DataError(f"non-integral count at row {bad[0]}, column {bad[1]}")
        elif arr.dtype.kind not in "iub":
            raise DataError(f"unsupported dtype {arr.dtype}")
        if np.any(arr < 0):
            bad = np.argwhere(arr < 0)[0]
            raise DataError(f"negative count at row {bad[0]}, column {bad[1]}")
        self.values = np.ascontiguousarray(arr, dtype=np.int64)
        self.values.setflags(write=False)
        if names is None:
            names = [f"X{j + 1}" for j in range(p)]
        names = [str(s) for s in names]
        if len(names) != p:
            raise DataError(f"{len(names)} names for {p} columns")
        if len(set(names)) != p:
            raise DataError("column names must be unique")
        self.names = tuple(names)
        self._values_f = None
        self._logfact = None

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def values_f(self) -> np.ndarray:
        if self._values_f is None:
            vf = np.asfortranarray(self.values, dtype=np.float64)
            vf.setflags(write=False)
            self._values_f = vf
        return self._values_f

    @property
    def log_factorials(self) -> np.ndarray:
        """Per-column ``sum_i log(x_ij!)``."""
        if self._logfact is None:
            from scipy.special import gammaln

            self._logfact = gammaln(self.values_f + 1.0).sum(axis=0)
        return self._logfact

    def column(self, j: int) -> np.ndarray:
        return self.values_f[:, j]

    def take_rows(self, rows) -> "CountMatrix":
        return CountMatrix(self.values[np.asarray(rows)], self.names)

    def __repr__(self) -> str:
        return f"CountMatrix(n={self.n}, p={self.p})"


def _check_node(v: int, p: int) -> int:
    if not (0 <= v < p):
        raise IndexError(f"node {v} out of range for p={p}")
    return int(v)


class Dag:
    """Directed acyclic graph on nodes ``0..p-1``.

    Keeps the edge set and the per-node parent lists in lockstep. The
    constructor rejects cycles; ``add_edge`` refuses edges that would
    close one.
    """

    def __init__(self, p: int, edges: Iterable[tuple[int, int]] = ()):
        if p < 1:
            raise ValueError("p must be positive")
        self.p = int(p)
        self._parents: list[set[int]] = [set() for _ in range(self.p)]
        self._children: list[set[int]] = [set() for _ in range(self.p)]
        for k, j in edges:
            k = _check_node(k, self.p)
            j = _check_node(j, self.p)
            if k == j:
                raise CycleError([k])
            self._parents[j].add(k)
            self._children[k].add(j)
        topological_order(self)

    @classmethod
    def from_parents(cls, parents: Sequence[Iterable[int]]) -> "Dag":
        return cls(len(parents), [(k, j) for j, pa in enumerate(parents) for k in pa])

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((k, j) for j in range(self.p) for k in self._parents[j])

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def parents(self, j: int) -> list[int]:
        return sorted(self._parents[j])

    def children(self, k: int) -> list[int]:
        return sorted(self._children[k])

    @property
    def n_edges(self) -> int:
        return sum(len(s) for s in self._parents)

    def has_edge(self, k: int, j: int) -> bool:
        return k in self._parents[j]

    def add_edge(self, k: int, j: int) -> None:
        k = _check_node(k, self.p)
        j = _check_node(j, self.p)
        if k == j or has_path(self, j, k):
            raise CycleError(_find_path(self, j, k) or [k])
        self._parents[j].add(k)
        self._children[k].add(j)

    def remove_edge(self, k: int, j: int) -> None:
        self._parents[j].discard(k)
        self._children[k].discard(j)

    def copy(self) -> "Dag":
        new = Dag.__new__(Dag)
        new.p = self.p
        new._parents = [set(s) for s in self._parents]
        new._children = [set(s) for s in self._children]
        return new

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for k, j in self.edges:
            a[k, j] = True
        return a

    def __eq__(self, other) -> bool:
        return isinstance(other, Dag) and self.p == other.p and self.edges == other.edges

    def __repr__(self) -> str:
        return f"Dag(p={self.p}, edges={self.sorted_edges()})"


def _find_path(dag: Dag, a: int, b: int) -> list[int] | None:
    """Node list of one directed path a ~> b of length >= 1, or None."""
    prev = {}
    stack = [a]
    seen = set()
    while stack:
        u = stack.pop()
        for v in dag._children[u]:
            if v in seen:
                continue
            seen.add(v)
            prev[v] = u
            if v == b:
                path = [b]
                cur = b
                while True:
                    cur = prev[cur]
                    path.append(cur)
                    if cur == a:
                        break
                return path[::-1]
            stack.append(v)
    return None


def has_path(dag: Dag, a: int, b: int) -> bool:
    """True iff a directed path ``a ~> b`` of length >= 1 exists.

    Adding ``k -> j`` keeps the graph acyclic iff ``has_path(dag, j, k)``
    is false.
    """
    _check_node(a, dag.p)
    _check_node(b, dag.p)
    return _find_path(dag, a, b) is not None


def topological_order(dag: Dag) -> list[int]:
    """Kahn's algorithm, ties broken by smallest node index."""
    indeg = [len(s) for s in dag._parents]
    heap = [v for v in range(dag.p) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in dag._children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    if len(order) < dag.p:
        raise CycleError(_extract_cycle(dag, {v for v in range(dag.p) if indeg[v] > 0}))
    return order


def _extract_cycle(dag: Dag, remaining: set[int]) -> list[int]:
    # every remaining node keeps a remaining parent, so walking parents must loop
    v = min(remaining)
    seen: dict[int, int] = {}
    walk = []
    while v not in seen:
        seen[v] = len(walk)
        walk.append(v)
        v = min(u for u in dag._parents[v] if u in remaining)
    cycle = walk[seen[v]:]
    return cycle[::-1]


class NeighborSets:
    """Candidate parent sets N(j), one sorted index tuple per node."""

    __slots__ = ("sets",)

    def __init__(self, sets: Sequence[Iterable[int]]):
        p = len(sets)
        out = []
        for j, s in enumerate(sets):
            s = sorted({_check_node(int(k), p) for k in s})
            if j in s:
                raise ValueError(f"node {j} listed in its own candidate set")
            out.append(tuple(s))
        self.sets = tuple(out)

    @classmethod
    def complete(cls, p: int) -> "NeighborSets":
        return cls([[k for k in range(p) if k != j] for j in range(p)])

    @classmethod
    def from_adjacency(cls, adj: np.ndarray) -> "NeighborSets":
        adj = np.asarray(adj, dtype=bool)
        return cls([np.flatnonzero(adj[:, j]).tolist() for j in range(adj.shape[0])])

    @property
    def p(self) -> int:
        return len(self.sets)

    def __getitem__(self, j: int) -> tuple[int, ...]:
        return self.sets[j]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.p, self.p), dtype=bool)
        for j, s in enumerate(self.sets):
            a[list(s), j] = True
        return a

    def is_symmetric(self) -> bool:
        a = self.adjacency()
        return bool(np.array_equal(a, a.T))

    def intersect(self, other: "NeighborSets") -> "NeighborSets":
        return NeighborSets([sorted(set(a) & set(b)) for a, b in zip(self.sets, other.sets)])

    def undirected_edges(self) -> list[tuple[int, int]]:
        return [(k, j) for j, s in enumerate(self.sets) for k in s if k < j]

    def __eq__(self, other) -> bool:
        return isinstance(other, NeighborSets) and self.sets == other.sets

    def __repr__(self) -> str:
        return f"NeighborSets({[list(s) for s in self.sets]})"


class ScoreKind(str, enum.Enum):
    LOGLIK = "loglik"
    BIC = "bic"


class PruneMode(str, enum.Enum):
    WALD = "wald"  # Wald tests after orientation
    DEVIANCE = "deviance"  # deviance test folded into orientation
    NONE = "none"


@dataclass(frozen=True)
class Config:
    """Tuning for one learnDAG run.

    ``alpha_pns``/``alpha_prune`` default to ``None``, meaning the
    sample-size schedule ``2(1 - Phi(n**e))`` with ``e = 0.15`` for
    ``p <= 50`` and ``e = 0.2`` above (see :meth:`resolve`).
    ``max_parents=None`` means ``p - 2``.
    """

    alpha_pns: float | None = None
    alpha_prune: float | None = None
    alpha_exponent: float | None = None
    max_parents: int | None = None
    bootstrap_b: int = 50
    bootstrap_threshold: float = 0.20
    score_kind: ScoreKind = ScoreKind.LOGLIK
    use_pns: bool = True
    use_margin_step: bool = False
    alpha_margin: float = 0.05
    prune_mode: PruneMode = PruneMode.WALD
    symmetrize: str = "or"
    min_gain: float | None = 0.0
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "score_kind", ScoreKind(self.score_kind))
        object.__setattr__(self, "prune_mode", PruneMode(self.prune_mode))
        for name in ("alpha_pns", "alpha_prune", "alpha_margin"):
            v = getattr(self, name)
            if v is not None and not (0.0 < v < 1.0):
                raise ConfigError(f"{name} must lie in (0, 1), got {v}")
        if not (0.0 < self.bootstrap_threshold <= 1.0):
            raise ConfigError(f"bootstrap_threshold must lie in (0, 1], got {self.bootstrap_threshold}")
        if self.bootstrap_b < 1:
            raise ConfigError("bootstrap_b must be a positive integer")
        if self.max_parents is not None and self.max_parents < 1:
            raise ConfigError("max_parents must be a positive integer")
        if self.alpha_exponent is not None and self.alpha_exponent <= 0:
            raise ConfigError("alpha_exponent must be positive")
        if self.symmetrize not in ("or", "and"):
            raise ConfigError("symmetrize must be 'or' or 'and'")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be >= 1")

    def resolve(self, n: int, p: int) -> "Config":
        """Copy with every data-dependent default filled in."""
        from .stattests import alpha_schedule

        expo = self.alpha_exponent
        if expo is None:
            expo = 0.15 if p <= 50 else 0.2
        level = alpha_schedule(n, expo)
        m = self.max_parents if self.max_parents is not None else max(p - 2, 1)
        return replace(
            self,
            alpha_exponent=expo,
            alpha_pns=self.alpha_pns if self.alpha_pns is not None else level,
            alpha_prune=self.alpha_prune if self.alpha_prune is not None else level,
            max_parents=m,
        )

    def to_dict(self) -> dict:
        d = {}
        for k in self.__dataclass_fields__:
            v = getattr(self, k)
            d[k] = v.value if isinstance(v, enum.Enum) else v
        return d


def bootstrap_cutoff(threshold: float, b: int) -> int:
    """Minimum selection count for an edge to survive ``b`` replicates."""
    # tolerate float noise such as 0.2 * 50 = 10.000000000000002
    return max(1, math.ceil(round(threshold * b, 9)))
