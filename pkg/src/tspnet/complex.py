"""Simplicial complexes, signed incidence matrices and Hodge Laplacians.

Simplices are stored with their vertices in ascending order, which fixes the
orientation. Within each order the simplices are sorted lexicographically, so
row and column ``i`` of every operator always refer to the same simplex.

The boundary of ``[v_0, ..., v_k]`` is ``sum_i (-1)^i [v_0, ..., v_i-hat, ..., v_k]``,
giving ``B_k`` of shape ``(N_{k-1}, N_k)`` with rows indexed by faces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateSimplex,
    DuplicateVertex,
    EmptyComplex,
    InvalidSimplex,
    OrderOutOfRange,
)

__all__ = [
    "HodgeTriple",
    "SimplicialComplex",
    "build_complex",
    "flag_complex",
    "hodge_laplacians",
    "incidence_matrix",
    "verify_chain_property",
]

Simplex = tuple[int, ...]


def _canonical(raw: Iterable[int], k: int | None) -> Simplex:
    verts = []
    for v in raw:
        if isinstance(v, (bool, np.bool_)) or not isinstance(v, (int, np.integer)):
            raise InvalidSimplex(f"vertex ids must be integers, got {v!r}")
        if v < 0:
            raise InvalidSimplex(f"vertex ids must be non-negative, got {v}")
        verts.append(int(v))
    s = tuple(sorted(verts))
    if len(set(s)) != len(s):
        raise DuplicateVertex(f"simplex {list(raw)} repeats a vertex")
    if not s:
        raise InvalidSimplex("empty simplex")
    if k is not None and len(s) != k + 1:
        raise InvalidSimplex(f"simplex {list(s)} listed at order {k} has {len(s)} vertices")
    return s


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """A face-closed, immutable collection of simplices up to order ``order``.

    Build instances with :func:`build_complex`; the constructor performs no
    validation.
    """

    simplices: tuple[tuple[Simplex, ...], ...]
    inserted_faces: int = 0
    _index: tuple[dict[Simplex, int], ...] = field(repr=False, default=())
    _cache: dict = field(repr=False, default_factory=dict, compare=False)

    @property
    def order(self) -> int:
        return len(self.simplices) - 1

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.simplices)

    def n(self, k: int) -> int:
        self._check_order(k, 0)
        return len(self.simplices[k])

    def index(self, simplex: Iterable[int]) -> int:
        """Row index of ``simplex`` within its order."""
        s = tuple(sorted(int(v) for v in simplex))
        return self._index[len(s) - 1][s]

    def simplex_lists(self) -> dict[int, list[list[int]]]:
        return {k: [list(s) for s in simps] for k, simps in enumerate(self.simplices)}

    def _check_order(self, k: int, lo: int) -> None:
        if not (lo <= k <= self.order):
            raise OrderOutOfRange(f"order {k} outside [{lo}, {self.order}]")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self.simplices == other.simplices

    def __hash__(self) -> int:
        return hash(self.simplices)


def build_complex(
    simplex_lists: Mapping[int | str, Sequence[Sequence[int]]] | Sequence[Sequence[Sequence[int]]],
) -> SimplicialComplex:
    """Validate simplices per order and close the collection under taking faces.

    Parameters
    ----------
    simplex_lists
        Either a mapping ``{k: [[v, ...], ...]}`` or a list indexed by ``k``.
        Vertices may be given in any order; they are sorted.

    Returns
    -------
    SimplicialComplex
        ``inserted_faces`` records how many missing faces were added.

    Raises
    ------
    DuplicateVertex, DuplicateSimplex, InvalidSimplex, EmptyComplex
    """
    if isinstance(simplex_lists, Mapping):
        items = [(int(k), v) for k, v in simplex_lists.items()]
    else:
        items = list(enumerate(simplex_lists))
    if any(k < 0 for k, _ in items):
        raise InvalidSimplex("orders must be non-negative")

    given: dict[int, set[Simplex]] = {}
    for k, lst in items:
        seen = given.setdefault(k, set())
        for raw in lst:
            s = _canonical(raw, k)
            if s in seen:
                raise DuplicateSimplex(f"simplex {list(s)} appears twice at order {k}")
            seen.add(s)

    top = max((k for k, s in given.items() if s), default=-1)
    if top < 0:
        raise EmptyComplex("no simplices given")
    levels = [set(given.get(k, ())) for k in range(top + 1)]

    inserted = 0
    for k in range(top, 0, -1):
        lower = levels[k - 1]
        for s in levels[k]:
            for face in combinations(s, k):
                if face not in lower:
                    lower.add(face)
                    inserted += 1
    if not levels[0]:
        raise EmptyComplex("complex has no 0-simplices")

    simplices = tuple(tuple(sorted(lv)) for lv in levels)
    index = tuple({s: i for i, s in enumerate(level)} for level in simplices)
    return SimplicialComplex(simplices, inserted, index)


def flag_complex(n_nodes: int, edges: Iterable[Sequence[int]], max_order: int) -> SimplicialComplex:
    """Clique complex of a graph truncated at ``max_order``."""
    adj: list[set[int]] = [set() for _ in range(n_nodes)]
    for a, b in edges:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    levels: list[list[Simplex]] = [[(v,) for v in range(n_nodes)]]
    frontier = levels[0]
    for _ in range(max_order):
        nxt = []
        for s in frontier:
            common = set.intersection(*(adj[v] for v in s))
            nxt.extend(s + (w,) for w in sorted(common) if w > s[-1])
        if not nxt:
            break
        levels.append(nxt)
        frontier = nxt
    return build_complex(levels)


def incidence_matrix(K: SimplicialComplex, k: int) -> sp.csr_matrix:
    """Signed integer incidence matrix ``B_k`` of shape ``(N_{k-1}, N_k)``.

    Each column holds the alternating-sign boundary of one ``k``-simplex.
    """
    K._check_order(k, 1)
    key = ("B", k)
    if key not in K._cache:
        faces = K._index[k - 1]
        n_cols = len(K.simplices[k])
        rows = np.empty(n_cols * (k + 1), dtype=np.int64)
        vals = np.empty_like(rows)
        for c, s in enumerate(K.simplices[k]):
            for i in range(k + 1):
                rows[c * (k + 1) + i] = faces[s[:i] + s[i + 1:]]
                vals[c * (k + 1) + i] = -1 if i % 2 else 1
        cols = np.repeat(np.arange(n_cols, dtype=np.int64), k + 1)
        B = sp.csr_matrix((vals, (rows, cols)), shape=(len(faces), n_cols))
        B.sort_indices()
        K._cache[key] = B
    return K._cache[key]


@dataclass(frozen=True)
class HodgeTriple:
    """Lower, upper and full Hodge Laplacians of one order (CSR, float64)."""

    k: int
    full: sp.csr_matrix
    lower: sp.csr_matrix | None = None
    upper: sp.csr_matrix | None = None

    @property
    def size(self) -> int:
        return self.full.shape[0]


def _as_float(M: sp.spmatrix) -> sp.csr_matrix:
    M = sp.csr_matrix(M, dtype=np.float64)
    M.eliminate_zeros()
    M.sort_indices()
    return M


def hodge_laplacians(K: SimplicialComplex, k: int) -> HodgeTriple:
    """``L_k = B_k^T B_k + B_{k+1} B_{k+1}^T`` split into its lower and upper parts."""
    K._check_order(k, 0)
    key = ("L", k)
    if key not in K._cache:
        lower = upper = None
        if k >= 1:
            B = incidence_matrix(K, k)
            lower = _as_float(B.T @ B)
        if k < K.order:
            B = incidence_matrix(K, k + 1)
            upper = _as_float(B @ B.T)
        if lower is None and upper is None:
            full = sp.csr_matrix((K.n(k), K.n(k)), dtype=np.float64)
        elif lower is None:
            full = upper
        elif upper is None:
            full = lower
        else:
            full = _as_float(lower + upper)
        K._cache[key] = HodgeTriple(k, full, lower, upper)
    return K._cache[key]


def verify_chain_property(K: SimplicialComplex) -> dict[int, int]:
    """Max ``|entry|`` of ``B_k B_{k+1}`` for every ``1 <= k < K``; exact integers."""
    report = {}
    for k in range(1, K.order):
        P = incidence_matrix(K, k) @ incidence_matrix(K, k + 1)
        report[k] = int(abs(P).max()) if P.nnz else 0
    return report
