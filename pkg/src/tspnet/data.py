"""JSON file formats, feature masking and synthetic datasets.

Formats
-------
``complex.json``::

    {"schema_version": 1, "order": K, "simplices": {"0": [[0], [1], ...], "1": [[0, 1], ...]}}

Missing faces are added on load. ``features.k.json`` holds one order's
features, row-major::

    {"order": k, "d": d, "values": [[...], ...]}

``trajectories.json`` holds edge flows (one per row), labels and the split::

    {"flows": [[...], ...], "labels": [...], "split": {"train": [...], "test": [...]}}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Any

import numpy as np

from .complex import SimplicialComplex, build_complex, incidence_matrix
from .errors import ComplexError, DimensionMismatch, ParseError, RateOutOfRange, SchemaVersionMismatch

__all__ = [
    "SCHEMA_VERSION",
    "FeatureFile",
    "Mask",
    "TrajectoryDataset",
    "example_complex",
    "load_complex",
    "load_features",
    "load_mask",
    "load_trajectories",
    "mask_features",
    "save_complex",
    "save_features",
    "save_mask",
    "save_trajectories",
    "synth_citation_like",
    "synth_trajectories",
    "two_hole_complex",
]

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# json helpers


def _read_json(path) -> Any:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: cannot read file ({exc.strerror or exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _field(obj: Any, key: str, path, kind: type | tuple[type, ...] = object) -> Any:
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: top level must be a JSON object")
    if key not in obj:
        raise ParseError(f"{path}: missing field '{key}'")
    val = obj[key]
    if not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ParseError(f"{path}: field '{key}' has the wrong type ({type(val).__name__})")
    return val


def _matrix(raw: Any, path, name: str) -> np.ndarray:
    if not isinstance(raw, list):
        raise ParseError(f"{path}: field '{name}' must be a list of rows")
    rows = []
    width = None
    for i, row in enumerate(raw):
        if not isinstance(row, list):
            raise ParseError(f"{path}: {name}[{i}] must be a list")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{path}: {name}[{i}] has {len(row)} entries, expected {width}")
        for j, v in enumerate(row):
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ParseError(f"{path}: {name}[{i}][{j}] is not a number")
        rows.append(row)
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{path}: field '{name}' contains non-finite values")
    return arr


def _index_list(raw: Any, path, name: str) -> np.ndarray:
    if not isinstance(raw, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in raw):
        raise ParseError(f"{path}: field '{name}' must be a list of integers")
    return np.array(raw, dtype=np.int64)


# ---------------------------------------------------------------------------
# complexes


def save_complex(K: SimplicialComplex, path) -> None:
    _write_json(path, {
        "schema_version": SCHEMA_VERSION,
        "order": K.order,
        "simplices": {str(k): [list(s) for s in simps] for k, simps in enumerate(K.simplices)},
    })


def load_complex(path) -> SimplicialComplex:
    """Read ``complex.json``; faces absent from the file are inserted (see ``inserted_faces``)."""
    obj = _read_json(path)
    version = obj.get("schema_version", SCHEMA_VERSION) if isinstance(obj, dict) else None
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"{path}: schema_version {version!r}, this reader handles {SCHEMA_VERSION}")
    raw = _field(obj, "simplices", path, dict)
    lists = {}
    for key, simps in raw.items():
        try:
            k = int(key)
        except ValueError:
            raise ParseError(f"{path}: simplices key {key!r} is not an order") from None
        if not isinstance(simps, list) or not all(isinstance(s, list) for s in simps):
            raise ParseError(f"{path}: simplices['{key}'] must be a list of vertex lists")
        lists[k] = simps
    try:
        K = build_complex(lists)
    except ComplexError as exc:
        raise ParseError(f"{path}: field 'simplices': {exc}") from exc
    if "order" in obj:
        order = _field(obj, "order", path, int)
        if order != K.order:
            raise ParseError(f"{path}: field 'order' is {order} but simplices reach order {K.order}")
    return K


# ---------------------------------------------------------------------------
# features


@dataclass
class FeatureFile:
    """Features of one order: ``values`` is ``(N_k, d)``, rows in the complex's simplex order."""

    order: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise DimensionMismatch(f"feature values must be 2-D, got shape {v.shape}")
        self.values = v

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def bind(self, K: SimplicialComplex) -> "FeatureFile":
        """Check that the row count matches ``N_k`` of ``K``."""
        if self.values.shape[0] != K.n(self.order):
            raise DimensionMismatch(f"order {self.order} features have {self.values.shape[0]} rows, complex has {K.n(self.order)}")
        return self


def save_features(F: FeatureFile, path) -> None:
    vals = [[_plain(v) for v in row] for row in F.values]
    _write_json(path, {"order": F.order, "d": F.d, "values": vals})


def _plain(v: float) -> int | float:
    return int(v) if float(v).is_integer() and abs(v) < 2**53 else float(v)


def load_features(path) -> FeatureFile:
    obj = _read_json(path)
    if isinstance(obj, dict) and obj.get("layout", "row-major") != "row-major":
        raise ParseError(f"{path}: field 'layout' must be 'row-major'")
    order = _field(obj, "order", path, int)
    d = _field(obj, "d", path, int)
    values = _matrix(_field(obj, "values", path, list), path, "values")
    if order < 0:
        raise ParseError(f"{path}: field 'order' must be non-negative")
    if values.shape[0] and values.shape[1] != d:
        raise ParseError(f"{path}: field 'd' is {d} but rows have {values.shape[1]} entries")
    return FeatureFile(order, values.reshape(values.shape[0], d))


# ---------------------------------------------------------------------------
# masks


@dataclass
class Mask:
    """``known`` is true for visible entries; ``rate`` and ``seed`` record how it was drawn."""

    known: np.ndarray
    rate: float
    seed: int

    @property
    def hidden(self) -> np.ndarray:
        return ~self.known


def mask_features(X, rate: float, seed: int):
    """Hide exactly ``floor(rate * size)`` entries uniformly at random and fill them with the median.

    The median is taken over the visible entries. Accepts an array or a
    :class:`FeatureFile` and returns the same kind, together with the
    :class:`Mask`.
    """
    if not (0.0 < float(rate) < 1.0):
        raise RateOutOfRange(f"missing rate must lie in (0, 1), got {rate}")
    is_file = isinstance(X, FeatureFile)
    values = X.values if is_file else np.asarray(X, dtype=np.float64)
    n_hidden = math.floor(rate * values.size)
    rng = np.random.default_rng(seed)
    flat_known = np.ones(values.size, dtype=bool)
    flat_known[rng.choice(values.size, size=n_hidden, replace=False)] = False
    known = flat_known.reshape(values.shape)
    filled = values.copy()
    if n_hidden:
        filled[~known] = np.median(values[known])
    mask = Mask(known, float(rate), int(seed))
    return (FeatureFile(X.order, filled) if is_file else filled), mask


def save_mask(mask: Mask, path) -> None:
    _write_json(path, {"rate": mask.rate, "seed": mask.seed, "shape": list(mask.known.shape),
                       "known": mask.known.reshape(-1).astype(int).tolist()})


def load_mask(path) -> Mask:
    obj = _read_json(path)
    rate = _field(obj, "rate", path, (int, float))
    seed = _field(obj, "seed", path, int)
    shape = _index_list(_field(obj, "shape", path, list), path, "shape")
    known = _field(obj, "known", path, list)
    if any(v not in (0, 1) or isinstance(v, float) for v in known):
        raise ParseError(f"{path}: field 'known' must hold 0/1 entries")
    if np.any(shape < 0) or int(np.prod(shape)) != len(known):
        raise ParseError(f"{path}: field 'shape' {shape.tolist()} does not match {len(known)} entries")
    return Mask(np.array(known, dtype=bool).reshape(tuple(shape)), float(rate), seed)


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class TrajectoryDataset:
    """Edge flows (rows of ``flows``, shape ``(n, N_1)``) with binary labels and a train/test split."""

    complex: SimplicialComplex
    flows: np.ndarray
    labels: np.ndarray
    train: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        self.flows = np.asarray(self.flows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.train = np.asarray(self.train, dtype=np.int64)
        self.test = np.asarray(self.test, dtype=np.int64)
        n = self.flows.shape[0]
        if self.flows.ndim != 2 or self.flows.shape[1] != self.complex.n(1):
            raise DimensionMismatch(f"flows must be (n, {self.complex.n(1)}), got {self.flows.shape}")
        if self.labels.shape != (n,):
            raise DimensionMismatch(f"{n} flows but {self.labels.size} labels")
        for name, idx in (("train", self.train), ("test", self.test)):
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise DimensionMismatch(f"{name} indices out of range for {n} flows")


def save_trajectories(ds: TrajectoryDataset, path) -> None:
    _write_json(path, {
        "flows": ds.flows.tolist(),
        "labels": ds.labels.tolist(),
        "split": {"train": ds.train.tolist(), "test": ds.test.tolist()},
    })


def load_trajectories(path, K: SimplicialComplex) -> TrajectoryDataset:
    obj = _read_json(path)
    flows = _matrix(_field(obj, "flows", path, list), path, "flows")
    labels = _index_list(_field(obj, "labels", path, list), path, "labels")
    split = _field(obj, "split", path, dict)
    train = _index_list(_field(split, "train", path, list), path, "split.train")
    test = _index_list(_field(split, "test", path, list), path, "split.test")
    if labels.size and not np.all(np.isin(labels, (0, 1))):
        raise ParseError(f"{path}: field 'labels' must hold 0/1 values")
    try:
        return TrajectoryDataset(K, flows, labels, train, test)
    except DimensionMismatch as exc:
        raise ParseError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# synthetic data


def example_complex() -> SimplicialComplex:
    """Small illustration complex with 24 nodes, 38 edges and 2 filled triangles.

    A 4 x 6 grid graph in which two squares are split by a diagonal that
    replaces one of their sides, and the resulting triangles are filled.
    """
    def v(r, c):
        return 6 * r + c

    edges = {tuple(sorted((v(r, c), v(r, c + 1)))) for r in range(4) for c in range(5)}
    edges |= {tuple(sorted((v(r, c), v(r + 1, c)))) for r in range(3) for c in range(6)}
    tris = []
    for r, c in ((0, 1), (2, 3)):
        edges.discard((v(r, c + 1), v(r + 1, c + 1)))
        edges.add((v(r, c + 1), v(r + 1, c)))
        tris.append([v(r, c), v(r, c + 1), v(r + 1, c)])
    return build_complex({0: [[i] for i in range(24)], 1: sorted(edges), 2: tris})


_CITATION_SCALES = {
    # authors, communities, papers, team-size range, cross-community probability,
    # top order, share of papers with no citations
    "tiny": dict(authors=24, communities=4, papers=24, team=(1, 3), cross=0.1, top=2, uncited=0.3),
    "small": dict(authors=80, communities=10, papers=90, team=(1, 6), cross=0.1, top=5, uncited=0.3),
    "paper": dict(authors=352, communities=30, papers=150, team=(1, 10), cross=0.05, top=5, uncited=0.3),
}


def synth_citation_like(seed: int, scale: str = "small") -> tuple[SimplicialComplex, dict[int, np.ndarray]]:
    """Co-authorship-style complex with citation-like integer features.

    Papers are random author teams drawn mostly within one community. Every
    team spans a simplex (truncated at the top order) and the feature of a
    simplex is the total citation count of the papers whose team contains
    it. A fixed share of papers is uncited; the rest draw log-normal counts
    rounded to integers, so simplices that share papers carry equal or
    nested values.

    Returns the complex and ``{k: values}`` with ``values`` of shape ``(N_k,)``.
    """
    if scale not in _CITATION_SCALES:
        raise ValueError(f"scale must be one of {sorted(_CITATION_SCALES)}, got {scale!r}")
    cfg = _CITATION_SCALES[scale]
    rng = np.random.default_rng(seed)
    n_auth, n_comm, top = cfg["authors"], cfg["communities"], cfg["top"]
    community = rng.integers(0, n_comm, size=n_auth)
    community[:n_comm] = np.arange(n_comm)
    members = [np.flatnonzero(community == c) for c in range(n_comm)]
    lo, hi = cfg["team"]

    citations: dict[tuple[int, ...], float] = {}
    for _ in range(cfg["papers"]):
        c = rng.integers(n_comm)
        size = int(rng.integers(lo, hi + 1))
        pool = members[c]
        team = set(rng.choice(pool, size=min(size, pool.size), replace=False).tolist())
        while len(team) < size:
            team.add(int(rng.integers(n_auth)) if rng.random() < cfg["cross"] or len(team) >= pool.size
                     else int(rng.choice(pool)))
        count = 0.0 if rng.random() < cfg["uncited"] else float(np.rint(rng.lognormal(mean=2.0, sigma=1.2)))
        team_key = tuple(sorted(team))
        for k in range(min(len(team_key), top + 1)):
            for s in combinations(team_key, k + 1):
                citations[s] = citations.get(s, 0.0) + count

    # authors without papers still appear as isolated nodes with zero citations
    for a in range(n_auth):
        citations.setdefault((a,), 0.0)
    by_order: dict[int, list[tuple[int, ...]]] = {}
    for s in citations:
        by_order.setdefault(len(s) - 1, []).append(s)
    K = build_complex({k: simps for k, simps in by_order.items()})
    features = {k: np.array([citations[s] for s in K.simplices[k]]) for k in range(K.order + 1)}
    return K, features


def _annulus(offset: int, rings: int, around: int):
    """Triangulated ring grid; node ``(r, a)`` is ``offset + r * around + a``."""
    def v(r, a):
        return offset + r * around + a % around

    edges, tris = [], []
    for r in range(rings):
        for a in range(around):
            edges.append((v(r, a), v(r, a + 1)))
            if r + 1 < rings:
                edges += [(v(r, a), v(r + 1, a)), (v(r, a), v(r + 1, a + 1))]
                tris += [(v(r, a), v(r, a + 1), v(r + 1, a + 1)), (v(r, a), v(r + 1, a), v(r + 1, a + 1))]
    loops = [[v(r, a) for a in range(around)] for r in range(rings)]
    return edges, tris, loops


def two_hole_complex(rings: tuple[int, int] = (3, 3), around: tuple[int, int] = (8, 12), bridge: int = 3):
    """Two triangulated annuli joined by a path of ``bridge`` unfilled edges.

    Returns the complex and, per hole, the node cycles (one per ring) that
    wind around it once. The harmonic space of ``L_1`` is two-dimensional
    and its two basis flows live on disjoint edge sets.
    """
    e0, t0, loops0 = _annulus(0, rings[0], around[0])
    n0 = rings[0] * around[0]
    e1, t1, loops1 = _annulus(n0, rings[1], around[1])
    n1 = n0 + rings[1] * around[1]
    path = [loops0[-1][0]] + list(range(n1, n1 + bridge - 1)) + [loops1[-1][0]]
    bridge_edges = list(zip(path[:-1], path[1:]))
    n_nodes = n1 + bridge - 1
    K = build_complex({0: [[i] for i in range(n_nodes)], 1: e0 + e1 + bridge_edges, 2: t0 + t1})
    return K, (loops0, loops1)


def _cycle_flow(K: SimplicialComplex, cycle: list[int]) -> np.ndarray:
    x = np.zeros(K.n(1))
    for a, b in zip(cycle, cycle[1:] + cycle[:1]):
        x[K.index((a, b))] += 1.0 if a < b else -1.0
    return x


def synth_trajectories(seed: int, n_train: int = 160, n_test: int = 40, noise: float = 0.1) -> TrajectoryDataset:
    """Two-class edge flows on :func:`two_hole_complex`.

    A class-``c`` sample is one counter-clockwise loop around hole ``c``
    (on a randomly chosen ring) plus a gradient flow ``B_1^T y`` with
    ``y ~ N(0, noise^2)`` on the nodes, scaled to unit norm. Classes are
    balanced and the split is a seeded permutation.
    """
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be at least 1")
    rng = np.random.default_rng(seed)
    K, loops = two_hole_complex()
    B1 = incidence_matrix(K, 1).toarray().astype(np.float64)
    n = n_train + n_test
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    flows = np.empty((n, K.n(1)))
    for i, c in enumerate(labels):
        ring = loops[c][rng.integers(len(loops[c]))]
        x = _cycle_flow(K, ring) + B1.T @ rng.normal(0.0, noise, size=K.n(0))
        flows[i] = x / np.linalg.norm(x)
    order = rng.permutation(n)
    return TrajectoryDataset(K, flows, labels, np.sort(order[:n_train]), np.sort(order[n_train:]))
