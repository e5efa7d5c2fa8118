"""Colored geometric random graph ensembles and seeded instance generation.

An ensemble is parameterized by a dimension d >= 2, a finite color
alphabet, a strictly positive sensor law nu over colors, a symmetric
nonnegative radius kernel, and a boundary convention.  An instance on n
vertices places points i.i.d. uniformly in [0,1)^d, colors them i.i.d.
from nu, and links every pair (i, j) whose distance is at most

    r_n(a, b) = (lambda(a, b) * ln(n) / n) ** (1/d)

for their colors (a, b).  Pairs with a zero kernel entry never connect.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import math

import numpy as np

from . import rng, serialize
from .geometry import CellGrid, MetricMode, ball_volume, sq_distances


class RegimeError(ValueError):
    """The (n, lambda) combination leaves the valid scaling regime."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ModelSpec:
    """Full parameterization of a colored geometric random graph ensemble."""

    d: int
    alphabet: tuple[str, ...]
    nu: np.ndarray
    lam: np.ndarray
    metric: MetricMode = MetricMode.TORUS

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or isinstance(self.d, bool):
            raise ValueError(f"d must be an integer, got {self.d!r}")
        if self.d < 2:
            raise ValueError(f"d must be >= 2, got {self.d}")
        alphabet = tuple(str(s) for s in self.alphabet)
        if not alphabet:
            raise ValueError("alphabet must be nonempty")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet symbols must be distinct")
        object.__setattr__(self, "alphabet", alphabet)
        k = len(alphabet)

        nu = np.asarray(self.nu, dtype=float)
        if nu.shape != (k,):
            raise ValueError(f"nu must have shape ({k},), got {nu.shape}")
        if np.any(nu <= 0.0):
            raise ValueError("sensor law entries must be strictly positive")
        if abs(float(nu.sum()) - 1.0) > 1e-12:
            raise ValueError(f"sensor law must sum to 1, got {nu.sum()!r}")
        object.__setattr__(self, "nu", _readonly(nu))

        lam = np.asarray(self.lam, dtype=float)
        if lam.shape != (k, k):
            raise ValueError(f"lambda must have shape ({k}, {k}), got {lam.shape}")
        if np.any(lam < 0.0):
            raise ValueError("radius kernel entries must be nonnegative")
        if not np.array_equal(lam, lam.T):
            raise ValueError("radius kernel must be exactly symmetric")
        if not np.any(lam > 0.0):
            raise ValueError("radius kernel must not be identically zero")
        object.__setattr__(self, "lam", _readonly(lam))

        if not isinstance(self.metric, MetricMode):
            object.__setattr__(self, "metric", MetricMode.parse(self.metric))

    @property
    def k(self) -> int:
        return len(self.alphabet)

    def color_index(self, symbol: str) -> int:
        return self.alphabet.index(symbol)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "alphabet": list(self.alphabet),
            "nu": self.nu.tolist(),
            "lambda": self.lam.tolist(),
            "metric": self.metric.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        return cls(
            d=int(data["d"]),
            alphabet=tuple(data["alphabet"]),
            nu=np.asarray(data["nu"], dtype=float),
            lam=np.asarray(data["lambda"], dtype=float),
            metric=MetricMode.parse(data["metric"]),
        )


@dataclass(frozen=True)
class Instance:
    """One realized graph, together with the ensemble and seed it came from.

    Edges are stored as an (m, 2) array of index pairs with i < j, sorted
    lexicographically.
    """

    spec: ModelSpec
    n: int
    seed: int
    positions: np.ndarray
    colors: np.ndarray
    edges: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "positions", _readonly(np.asarray(self.positions, dtype=float)))
        object.__setattr__(self, "colors", _readonly(np.asarray(self.colors, dtype=np.int64)))
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "edges", _readonly(edges))

    @property
    def edge_count(self) -> int:
        return self.edges.shape[0]


def radius_matrix(spec: ModelSpec, n: int) -> np.ndarray:
    """Connection radii r_n(a, b) for all color pairs."""
    if n < 2:
        raise ValueError(f"n must be >= 2 for a connection radius, got {n}")
    return (spec.lam * (math.log(n) / n)) ** (1.0 / spec.d)


def radius_of(spec: ModelSpec, n: int, a: int, b: int) -> float:
    """Connection radius r_n(a, b) = (lambda(a,b) * ln(n) / n)^(1/d)."""
    return float(radius_matrix(spec, n)[a, b])


def connection_prob(spec: ModelSpec, n: int) -> np.ndarray:
    """Per-color-pair link probabilities p_n(a, b) = rho(d) lambda(a,b) ln(n)/n.

    Valid only while every radius stays inside the regime where the
    ball-volume identity holds: r_n <= 1/2 in torus mode, and p_n <= 1
    always.  Raises RegimeError otherwise.
    """
    r = radius_matrix(spec, n)
    if spec.metric is MetricMode.TORUS and float(r.max()) > 0.5:
        raise RegimeError(
            f"n={n} too small for this kernel: max radius {r.max():.6g} exceeds 1/2 "
            "in torus mode"
        )
    p = ball_volume(spec.d) * spec.lam * (math.log(n) / n)
    if float(p.max()) > 1.0:
        raise RegimeError(
            f"n={n} too small for this kernel: max link probability {p.max():.6g} "
            "exceeds 1"
        )
    return p


def _edge_blocks(positions, colors, rsq, side, mode):
    """Edges from grid candidate pairs; each candidate tested exactly once.

    Runs in the grid's cell-sorted coordinate space so the per-block gathers
    stay cache-local, and maps back to vertex indices only for hits.
    """
    grid = CellGrid(positions, side, mode)
    order = grid._order
    d = positions.shape[1]
    k = rsq.shape[0]
    cols = [np.ascontiguousarray(positions[order, axis]) for axis in range(d)]
    torus = mode is MetricMode.TORUS
    if k > 1:
        colors_sorted = np.ascontiguousarray(colors[order])
        rsq_flat = np.ascontiguousarray(rsq.reshape(-1))
    rsq_scalar = float(rsq[0, 0])
    found_u, found_v = [], []
    for u_pos, v_pos in grid._candidate_blocks():
        ss = None
        for axis in range(d):
            delta = np.abs(cols[axis][u_pos] - cols[axis][v_pos])
            if torus:
                np.minimum(delta, 1.0 - delta, out=delta)
            delta *= delta
            ss = delta if ss is None else ss + delta
        if k == 1:
            hit = ss <= rsq_scalar if rsq_scalar > 0.0 else np.zeros(len(ss), dtype=bool)
        else:
            bound = rsq_flat[colors_sorted[u_pos] * k + colors_sorted[v_pos]]
            hit = (ss <= bound) & (bound > 0.0)
        if np.any(hit):
            found_u.append(order[u_pos[hit]])
            found_v.append(order[v_pos[hit]])
    if not found_u:
        return np.zeros((0, 2), dtype=np.int64)
    uu = np.concatenate(found_u)
    vv = np.concatenate(found_v)
    i = np.minimum(uu, vv)
    j = np.maximum(uu, vv)
    sort = np.lexsort((j, i))
    return np.stack([i[sort], j[sort]], axis=1)


def generate(spec: ModelSpec, n: int, seed: int) -> Instance:
    """Sample one instance; a pure function of (spec, n, seed).

    Positions and colors draw from dedicated sub-streams of the seed, so
    kernel-only changes leave them untouched.  Edge finding goes through a
    cell grid with cell side equal to the largest connection radius.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n >= 2:
        connection_prob(spec, n)  # regime guard

    pos_gen = rng.generator(seed, rng.STREAM_POSITIONS)
    positions = pos_gen.random((n, spec.d))

    col_gen = rng.generator(seed, rng.STREAM_COLORS)
    cum = np.cumsum(spec.nu)
    cum[-1] = 1.0
    colors = np.searchsorted(cum, col_gen.random(n), side="right").astype(np.int64)

    if n < 2:
        edges = np.zeros((0, 2), dtype=np.int64)
    else:
        r = radius_matrix(spec, n)
        edges = _edge_blocks(positions, colors, r * r, float(r.max()), spec.metric)
    return Instance(spec=spec, n=n, seed=seed, positions=positions, colors=colors, edges=edges)


def brute_force_edges(positions, colors, spec: ModelSpec, n: int) -> np.ndarray:
    """All-pairs O(n^2) edge set; the oracle the grid path is checked against."""
    if n < 2:
        return np.zeros((0, 2), dtype=np.int64)
    r = radius_matrix(spec, n)
    rsq = r * r
    iu, jv = np.triu_indices(n, k=1)
    ss = sq_distances(positions[iu], positions[jv], spec.metric)
    bound = rsq[colors[iu], colors[jv]]
    hit = (ss <= bound) & (bound > 0.0)
    return np.stack([iu[hit], jv[hit]], axis=1).astype(np.int64)


def validate(instance: Instance) -> list[str]:
    """Re-check every instance invariant by brute force; empty list iff valid.

    Violations come back as human-readable strings ('self-loop', 'missing
    edge', 'extra edge', ...), never as exceptions.
    """
    out: list[str] = []
    spec, n = instance.spec, instance.n
    pos, colors, edges = instance.positions, instance.colors, instance.edges

    if pos.shape != (n, spec.d):
        out.append(f"positions shape {pos.shape} != ({n}, {spec.d})")
        return out
    if colors.shape != (n,):
        out.append(f"colors shape {colors.shape} != ({n},)")
        return out
    if n and (pos.min() < 0.0 or pos.max() >= 1.0):
        out.append("position coordinate outside [0, 1)")
    if n and (colors.min() < 0 or colors.max() >= spec.k):
        out.append("color index outside alphabet")
        return out

    well_formed = []
    seen = set()
    for i, j in edges:
        i, j = int(i), int(j)
        if i == j:
            out.append(f"self-loop at vertex {i}")
            continue
        if not (0 <= i < n and 0 <= j < n):
            out.append(f"edge ({i},{j}) index out of range")
            continue
        if i > j:
            out.append(f"edge ({i},{j}) not in i<j order")
            continue
        if (i, j) in seen:
            out.append(f"duplicate edge ({i},{j})")
            continue
        seen.add((i, j))
        well_formed.append((i, j))
    for a, b in zip(well_formed, well_formed[1:]):
        if a > b:
            out.append(f"edge list not lexicographically sorted at {b}")
            break

    truth = brute_force_edges(pos, colors, spec, n)
    true_set = {(int(i), int(j)) for i, j in truth}
    for pair in sorted(true_set - set(well_formed)):
        out.append(f"missing edge {pair}")
    for pair in sorted(set(well_formed) - true_set):
        out.append(f"extra edge {pair}")
    return out


def instance_to_json(instance: Instance) -> str:
    """Serialize an instance to its canonical JSON document."""
    doc = instance.spec.to_dict()
    doc.update(
        {
            "n": instance.n,
            "seed": instance.seed,
            "positions": instance.positions.tolist(),
            "colors": instance.colors.tolist(),
            "edges": instance.edges.tolist(),
        }
    )
    return serialize.dumps(doc)


def instance_from_json(text: str) -> Instance:
    data = serialize.loads(text)
    spec = ModelSpec.from_dict(data)
    return Instance(
        spec=spec,
        n=int(data["n"]),
        seed=int(data["seed"]),
        positions=np.asarray(data["positions"], dtype=float).reshape(int(data["n"]), spec.d),
        colors=np.asarray(data["colors"], dtype=np.int64),
        edges=np.asarray(data["edges"], dtype=np.int64).reshape(-1, 2),
    )
