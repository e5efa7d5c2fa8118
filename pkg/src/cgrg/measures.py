"""Empirical sensor and link measures of an instance.

The sensor measure is the color histogram normalized by n.  The link
measure puts mass 1/(n ln n) at (a, b) and at (b, a) for every edge with
endpoint colors a and b, so its total mass is 2|E| / (n ln n) and
monochromatic edges carry weight 2 on the diagonal.  Natural logarithms
throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import math

import numpy as np

from . import serialize
from .model import Instance


def check_prob_measure(w, tol: float = 1e-12) -> np.ndarray:
    """Validate a probability vector: nonnegative, sums to 1 within tol."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1:
        raise ValueError(f"probability measure must be a vector, got shape {w.shape}")
    if np.any(w < 0.0):
        raise ValueError("probability measure has a negative entry")
    if abs(float(w.sum()) - 1.0) > tol:
        raise ValueError(f"probability measure sums to {w.sum()!r}, not 1")
    return w


def check_finite_measure2(w, tol: float = 1e-12) -> np.ndarray:
    """Validate a symmetric finite measure on color pairs."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError(f"pair measure must be a square matrix, got shape {w.shape}")
    if np.any(w < 0.0):
        raise ValueError("pair measure has a negative entry")
    if w.size and float(np.abs(w - w.T).max()) > tol:
        raise ValueError("pair measure is not symmetric")
    return w


@dataclass(frozen=True)
class EmpiricalPair:
    """The (sensor, link) measure pair of one instance."""

    l1: np.ndarray
    l2: np.ndarray
    n: int
    edge_count: int


def sensor_measure(instance: Instance) -> np.ndarray:
    """Empirical color frequencies, one entry per alphabet symbol."""
    if instance.n == 0:
        raise ValueError("empty graph has no empirical sensor measure")
    counts = np.bincount(instance.colors, minlength=instance.spec.k)
    return counts / instance.n


def link_measure(instance: Instance) -> np.ndarray:
    """Empirical link measure: color-pair edge counts over n ln n.

    Each edge contributes one delta at (a, b) and one at (b, a); for a == b
    both land on the diagonal.  The result is exactly symmetric because the
    underlying integer count matrix is.
    """
    n, k = instance.n, instance.spec.k
    if n < 2:
        raise ValueError(f"link measure needs n >= 2, got n={n}")
    counts = np.zeros((k, k), dtype=np.int64)
    if instance.edge_count:
        a = instance.colors[instance.edges[:, 0]]
        b = instance.colors[instance.edges[:, 1]]
        np.add.at(counts, (a, b), 1)
        np.add.at(counts, (b, a), 1)
    return counts / (n * math.log(n))


def empirical_pair(instance: Instance) -> EmpiricalPair:
    return EmpiricalPair(
        l1=sensor_measure(instance),
        l2=link_measure(instance),
        n=instance.n,
        edge_count=instance.edge_count,
    )


def product_measure(omega, kernel, scale: float = 1.0) -> np.ndarray:
    """Weighted product measure: entry (a, b) = scale * kernel(a,b) * omega(a) * omega(b)."""
    omega = np.asarray(omega, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    k = omega.shape[0]
    if kernel.shape != (k, k):
        raise ValueError(f"kernel shape {kernel.shape} does not match measure size {k}")
    if scale < 0.0:
        raise ValueError(f"scale must be >= 0, got {scale}")
    return scale * kernel * np.outer(omega, omega)


def measures_to_json(pair: EmpiricalPair) -> str:
    doc = {
        "l1": pair.l1.tolist(),
        "l2": pair.l2.tolist(),
        "n": pair.n,
        "edge_count": pair.edge_count,
        "l2_mass": float(pair.l2.sum()),
    }
    return serialize.dumps(doc)
