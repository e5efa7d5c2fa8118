"""Monte Carlo harnesses: AEP convergence, weak law sweeps, the pairwise
distance-probability oracle, and randomized rate-function scans.

Every sweep derives its replicate seeds deterministically from
(master_seed, n, replicate), so re-running reproduces identical rows, and
rows are sorted before aggregation so parallel execution order never shows
in the output.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import csv
import io
import math

import numpy as np

from . import rng, serialize
from .geometry import MetricMode, ball_volume
from .infotheory import (
    aep_limit,
    expected_neg_log_likelihood,
    log_likelihood,
    near_entropy,
    rate_i1,
    rate_i2,
    rel_entropy_prob,
)
from .measures import link_measure, product_measure, sensor_measure
from .model import ModelSpec, RegimeError, generate

Row = tuple[int, int, int, str, float]
Skip = tuple[int, int, str]


@dataclass(frozen=True)
class Aggregate:
    n: int
    statistic: str
    mean: float
    sd: float
    se: float
    count: int


@dataclass
class SweepResult:
    """Raw per-replicate rows plus per-(n, statistic) aggregates.

    rows hold (n, replicate, seed, statistic, value); skips hold
    (n, replicate, reason) for cells that produced no rows, so every
    (n, replicate) cell is accounted for one way or the other.
    """

    rows: list[Row]
    skips: list[Skip] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    aggregates: dict[tuple[int, str], Aggregate] = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows)
        self.skips = sorted(self.skips)
        if not self.aggregates:
            self.aggregates = self.recompute_aggregates()

    def recompute_aggregates(self) -> dict[tuple[int, str], Aggregate]:
        groups: dict[tuple[int, str], list[float]] = {}
        for n, _rep, _seed, stat, value in self.rows:
            groups.setdefault((n, stat), []).append(value)
        out = {}
        for (n, stat), values in sorted(groups.items()):
            arr = np.asarray(values, dtype=float)
            count = len(arr)
            mean = float(arr.mean())
            sd = float(arr.std(ddof=1)) if count >= 2 else 0.0
            out[(n, stat)] = Aggregate(
                n=n, statistic=stat, mean=mean, sd=sd,
                se=sd / math.sqrt(count) if count >= 2 else 0.0, count=count,
            )
        return out

    def mean_of(self, n: int, statistic: str) -> float:
        return self.aggregates[(n, statistic)].mean

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "replicate", "seed", "statistic", "value"])
        for n, rep, seed, stat, value in self.rows:
            writer.writerow([n, rep, seed, stat, format(value, ".17g")])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "rows": [
                {"n": n, "replicate": r, "seed": s, "statistic": st, "value": v}
                for n, r, s, st, v in self.rows
            ],
            "skips": [
                {"n": n, "replicate": r, "reason": why} for n, r, why in self.skips
            ],
            "aggregates": [
                {
                    "n": a.n,
                    "statistic": a.statistic,
                    "mean": a.mean,
                    "sd": a.sd,
                    "se": a.se,
                    "count": a.count,
                }
                for a in self.aggregates.values()
            ],
            "meta": self.meta,
        }
        return serialize.dumps(doc)


def _run_cells(task, cells, threads: int):
    if threads <= 1:
        return [task(cell) for cell in cells]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, cells, chunksize=max(1, len(cells) // (4 * threads))))


def _aep_cell(args):
    spec, n, rep, seed, limit, eps = args
    try:
        inst = generate(spec, n, seed)
        ll = log_likelihood(inst)
    except RegimeError as exc:
        return [], (n, rep, str(exc))
    stat = -ll / (n * math.log(n) ** 2)
    rows = [
        (n, rep, seed, "aep_statistic", stat),
        (n, rep, seed, "neg_log_p", -ll),
        (n, rep, seed, "outside_eps", 1.0 if abs(stat - limit) >= eps else 0.0),
    ]
    return rows, None


def aep_sweep(
    spec: ModelSpec,
    ns: list[int],
    reps: int,
    master_seed: int,
    epsilon: float | None = None,
    threads: int = 1,
) -> SweepResult:
    """Replicated AEP statistics across sizes, against the exact finite-n mean.

    Per replicate: the entropy statistic -log P / (n (ln n)^2), the raw
    -log P, and an indicator of landing outside the epsilon band around the
    limit.  The closed-form expectation of -log P is recorded once per n.
    Epsilon defaults to half the predicted finite-n gap at each n, so the
    band tracks what is actually attainable at that size.
    """
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    limit = aep_limit(spec.nu, spec.lam, spec.d)
    rows: list[Row] = []
    skips: list[Skip] = []
    eps_by_n: dict[int, float] = {}
    cells = []
    for n in ns:
        try:
            expected = expected_neg_log_likelihood(spec, n)
        except (RegimeError, ValueError) as exc:
            for rep in range(reps):
                skips.append((n, rep, str(exc)))
            continue
        expected_stat = expected / (n * math.log(n) ** 2)
        eps = epsilon if epsilon is not None else 0.5 * abs(expected_stat - limit)
        eps_by_n[n] = eps
        for rep in range(reps):
            seed = rng.replicate_seed(master_seed, n, rep)
            cells.append((spec, n, rep, seed, limit, eps))
            rows.append((n, rep, seed, "expected_neg_log_p", expected))
    for cell_rows, skip in _run_cells(_aep_cell, cells, threads):
        rows.extend(cell_rows)
        if skip is not None:
            skips.append(skip)
    meta = {
        "sweep": "aep",
        "limit": limit,
        "epsilon": {str(n): e for n, e in eps_by_n.items()},
        "master_seed": master_seed,
        "reps": reps,
    }
    return SweepResult(rows=rows, skips=skips, meta=meta)


def _wlln_cell(args):
    spec, n, rep, seed, target, literal = args
    try:
        inst = generate(spec, n, seed)
    except RegimeError as exc:
        return [], (n, rep, str(exc))
    l1 = sensor_measure(inst)
    l2 = link_measure(inst)
    rows = [
        (n, rep, seed, "l1_sup_dev", float(np.abs(l1 - spec.nu).max())),
        (n, rep, seed, "l2_sup_dev", float(np.abs(l2 - target).max())),
        (n, rep, seed, "l2_sup_dev_literal", float(np.abs(l2 - literal).max())),
    ]
    return rows, None


def wlln_sweep(
    spec: ModelSpec,
    ns: list[int],
    reps: int,
    master_seed: int,
    threads: int = 1,
) -> SweepResult:
    """Sup-deviations of the empirical measures from their limits.

    l2_sup_dev measures against the ball-volume-scaled product measure
    rho(d) * lambda * nu x nu (the actual limit); l2_sup_dev_literal
    measures against the unscaled lambda * nu x nu, which converges to a
    positive constant instead of zero and is reported to document exactly
    that.
    """
    if reps < 2:
        raise ValueError(f"reps must be >= 2, got {reps}")
    target = product_measure(spec.nu, spec.lam, ball_volume(spec.d))
    literal = product_measure(spec.nu, spec.lam, 1.0)
    cells = [
        (spec, n, rep, rng.replicate_seed(master_seed, n, rep), target, literal)
        for n in ns
        for rep in range(reps)
    ]
    rows: list[Row] = []
    skips: list[Skip] = []
    for cell_rows, skip in _run_cells(_wlln_cell, cells, threads):
        rows.extend(cell_rows)
        if skip is not None:
            skips.append(skip)
    meta = {"sweep": "wlln", "master_seed": master_seed, "reps": reps}
    return SweepResult(rows=rows, skips=skips, meta=meta)


def mc_estimate_F(
    d: int,
    t: float,
    mode: MetricMode,
    samples: int,
    seed: int,
    chunk: int = 1 << 20,
) -> dict:
    """Monte Carlo estimate of P(|U1 - U2| <= t) for uniform points in [0,1)^d.

    Returns the proportion and its binomial standard error.  On the torus
    with t <= 1/2 the exact value is rho(d) * t^d.
    """
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if samples < 1000:
        raise ValueError(f"samples must be >= 1000, got {samples}")
    gen = rng.generator(seed)
    hits = 0
    remaining = samples
    tsq = t * t
    while remaining > 0:
        batch = min(chunk, remaining)
        u1 = gen.random((batch, d))
        u2 = gen.random((batch, d))
        diff = np.abs(u1 - u2)
        if mode is MetricMode.TORUS:
            diff = np.minimum(diff, 1.0 - diff)
        ss = np.einsum("ij,ij->i", diff, diff)
        hits += int(np.count_nonzero(ss <= tsq))
        remaining -= batch
    p_hat = hits / samples
    return {
        "d": d,
        "t": t,
        "metric": mode.value,
        "samples": samples,
        "estimate": p_hat,
        "std_error": math.sqrt(p_hat * (1.0 - p_hat) / samples),
    }


def rate_scan(
    nu,
    kernel,
    d: int,
    trials: int,
    seed: int,
    tol: float = 1e-9,
) -> dict:
    """Randomized verification of the rate functions' sign and zero set.

    Each trial draws a Dirichlet color law omega and checks, with
    pi_ref = rho(d) * kernel * omega x omega:

      * the speed-(n ln n) rate is exactly zero at pi = pi_ref,
      * scaling pi_ref by 1.5 costs at least ||pi_ref|| (1.5 ln 1.5 - 0.5)/2,
      * random entrywise distortions keep it nonnegative,
      * an additive 1e-3 bump on the largest entry makes it positive,
      * the speed-n rate equals H(omega || nu) on the manifold and is
        infinite 10x tolerance off it.

    Raises ValueError listing violations, if any; otherwise returns a report
    with the extremes seen.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    nu = np.asarray(nu, dtype=float)
    kernel = np.asarray(kernel, dtype=float)
    k = len(nu)
    gen = rng.generator(seed)
    rho = ball_volume(d)
    phi_bound_unit = 1.5 * math.log(1.5) - 0.5
    violations: list[str] = []
    i1_min, i1_max = math.inf, -math.inf
    equality_max = 0.0
    for trial in range(trials):
        omega = gen.dirichlet(np.ones(k))
        pi_ref = product_measure(omega, kernel, rho)
        mass = float(pi_ref.sum())

        v_eq = rate_i1(omega, pi_ref, kernel, d)
        equality_max = max(equality_max, v_eq)
        if v_eq > 1e-12:
            violations.append(f"trial {trial}: equality case gave {v_eq!r}")

        v_scaled = rate_i1(omega, 1.5 * pi_ref, kernel, d)
        if v_scaled < 0.5 * mass * phi_bound_unit - 1e-12:
            violations.append(
                f"trial {trial}: 1.5x case {v_scaled!r} below bound "
                f"{0.5 * mass * phi_bound_unit!r}"
            )

        factors = np.exp(gen.normal(0.0, 0.5, size=(k, k)))
        factors = 0.5 * (factors + factors.T)
        v_rand = rate_i1(omega, pi_ref * factors, kernel, d)
        if v_rand < 0.0:
            violations.append(f"trial {trial}: negative rate {v_rand!r}")
        if math.isfinite(v_rand):
            i1_min = min(i1_min, v_rand)
            i1_max = max(i1_max, v_rand)

        bumped = pi_ref.copy()
        a, b = np.unravel_index(np.argmax(pi_ref), pi_ref.shape)
        bumped[a, b] += 1e-3
        bumped[b, a] = bumped[a, b]
        v_bump = rate_i1(omega, bumped, kernel, d)
        if not v_bump > 0.0:
            violations.append(f"trial {trial}: 1e-3 bump gave {v_bump!r}")

        v2_on = rate_i2(omega, pi_ref, nu, kernel, d, tol)
        h_direct = rel_entropy_prob(omega, nu)
        if not math.isclose(v2_on, h_direct, rel_tol=1e-12, abs_tol=1e-12):
            violations.append(
                f"trial {trial}: on-manifold speed-n rate {v2_on!r} != {h_direct!r}"
            )
        off = pi_ref.copy()
        off[a, b] += 10.0 * tol
        off[b, a] = off[a, b]
        if not math.isinf(rate_i2(omega, off, nu, kernel, d, tol)):
            violations.append(f"trial {trial}: off-manifold speed-n rate finite")

    if violations:
        raise ValueError(
            f"rate scan found {len(violations)} violations; first: {violations[0]}"
        )
    return {
        "trials": trials,
        "d": d,
        "equality_max": equality_max,
        "i1_random_min": i1_min if math.isfinite(i1_min) else 0.0,
        "i1_random_max": i1_max if math.isfinite(i1_max) else 0.0,
        "violations": 0,
    }
