import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cgrg import (
    MetricMode,
    ModelSpec,
    aep_limit,
    aep_statistic,
    code_length_bits,
    entropy_bits,
    expected_neg_log_likelihood,
    generate,
    log_likelihood,
    log_likelihood_naive,
    loglik_decomposition,
    near_entropy,
    product_measure,
    rate_i1,
    rate_i2,
    rel_entropy_finite,
    rel_entropy_prob,
)
from cgrg.geometry import ball_volume
from cgrg.model import Instance

from conftest import spec_for

# frozen 50-digit evaluations
LN2 = 0.6931471805599453
TWO_LN2 = 1.3862943611198906
NEAR_ENTROPY_X2 = 0.3862943611198906  # 2 ln 2 - 1
RATE_I1_X2 = 0.1931471805599453
LL_N2_EDGE = -2.2175153082862551  # ln(pi * 0.1 * ln 2 / 2)
AEP_N2 = 2.3077337887860496  # -LL_N2_EDGE / (2 (ln 2)^2)
PI_HALF = 1.5707963267948966
H_BITS_K1 = 0.7213475204444817  # 1 / (2 ln 2)


def _dirichlet_pairs(seed, trials, k):
    gen = np.random.default_rng(seed)
    for _ in range(trials):
        yield gen.dirichlet(np.ones(k)), gen.dirichlet(np.ones(k))


class TestRelEntropyProb:
    def test_zero_at_equality(self):
        w = np.array([0.2, 0.3, 0.5])
        assert rel_entropy_prob(w, w) == 0.0

    def test_point_mass_vs_uniform(self):
        assert rel_entropy_prob(
            np.array([1.0, 0.0]), np.array([0.5, 0.5])
        ) == pytest.approx(LN2, rel=1e-14)

    def test_support_violation_infinite(self):
        assert rel_entropy_prob(np.array([0.5, 0.5]), np.array([1.0, 0.0])) == math.inf

    def test_nonnegative_random(self):
        for omega, nu in _dirichlet_pairs(1, 500, 3):
            assert rel_entropy_prob(omega, nu) >= 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            rel_entropy_prob(np.array([1.0]), np.array([0.5, 0.5]))


class TestRelEntropyFinite:
    def test_zero_at_equality(self):
        m = np.array([[0.5, 0.2], [0.2, 0.1]])
        assert rel_entropy_finite(m, m) == 0.0

    def test_doubled_unit_mass(self):
        base = np.array([[0.25, 0.25], [0.25, 0.25]])
        assert rel_entropy_finite(2.0 * base, base) == pytest.approx(
            TWO_LN2, rel=1e-14
        )

    def test_zero_measure(self):
        base = np.array([[0.25, 0.25], [0.25, 0.25]])
        assert rel_entropy_finite(np.zeros((2, 2)), base) == 0.0

    def test_can_be_negative(self):
        base = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert rel_entropy_finite(0.5 * base, base) < 0.0

    def test_support_violation(self):
        pi = np.array([[0.5, 0.1], [0.1, 0.0]])
        ref = np.array([[0.5, 0.0], [0.0, 0.5]])
        assert rel_entropy_finite(pi, ref) == math.inf


class TestNearEntropy:
    def test_zero_at_reference(self):
        omega = np.array([0.4, 0.6])
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        ref = product_measure(omega, kernel, ball_volume(2))
        assert near_entropy(ref, omega, kernel, 2) == 0.0

    def test_doubled_reference(self):
        # scale the reference so it has unit mass, then double it
        omega = np.array([0.5, 0.5])
        kernel = np.ones((2, 2)) / ball_volume(2)
        ref = product_measure(omega, kernel, ball_volume(2))
        assert float(ref.sum()) == pytest.approx(1.0, abs=1e-15)
        assert near_entropy(2.0 * ref, omega, kernel, 2) == pytest.approx(
            NEAR_ENTROPY_X2, rel=1e-13
        )

    def test_zero_measure_leaves_reference_mass(self):
        omega = np.array([0.4, 0.6])
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        ref = product_measure(omega, kernel, ball_volume(2))
        assert near_entropy(np.zeros((2, 2)), omega, kernel, 2) == pytest.approx(
            float(ref.sum()), rel=1e-14
        )

    def test_infinite_off_support(self):
        omega = np.array([0.5, 0.5])
        kernel = np.array([[1.0, 0.0], [0.0, 1.0]])
        pi = np.array([[0.1, 0.2], [0.2, 0.1]])
        assert near_entropy(pi, omega, kernel, 2) == math.inf

    @given(st.integers(0, 10_000))
    @settings(max_examples=300, deadline=None)
    def test_matches_phi_form(self, seed):
        # independent re-derivation: sum ref * phi(pi/ref), phi(x) = x ln x - x + 1
        gen = np.random.default_rng(seed)
        omega = gen.dirichlet(np.ones(2))
        base = gen.uniform(0.1, 2.0, (2, 2))
        kernel = 0.5 * (base + base.T)
        ref = product_measure(omega, kernel, ball_volume(2))
        factors = np.exp(gen.normal(0, 0.7, (2, 2)))
        factors = 0.5 * (factors + factors.T)
        pi = ref * factors
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(ref > 0, pi / np.where(ref > 0, ref, 1.0), 0.0)
            phi = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)) - x + 1.0, 1.0)
        expected = float(np.sum(ref * phi))
        value = near_entropy(pi, omega, kernel, 2)
        assert value == pytest.approx(expected, rel=1e-12, abs=1e-12)
        assert value >= 0.0

    def test_nonnegative_zero_iff_reference(self):
        omega = np.array([0.3, 0.7])
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        ref = product_measure(omega, kernel, ball_volume(2))
        assert near_entropy(ref, omega, kernel, 2) == 0.0
        for eps in (1e-3, 1e-2, 1e-1):
            bumped = ref.copy()
            bumped[0, 1] += eps
            bumped[1, 0] += eps
            assert near_entropy(bumped, omega, kernel, 2) > 0.0


class TestRateFunctions:
    def test_i1_equality_and_scaling(self):
        omega = np.array([0.5, 0.5])
        kernel = np.ones((2, 2)) / ball_volume(2)
        ref = product_measure(omega, kernel, ball_volume(2))
        assert rate_i1(omega, ref, kernel, 2) == 0.0
        assert rate_i1(omega, 2.0 * ref, kernel, 2) == pytest.approx(
            RATE_I1_X2, rel=1e-13
        )

    def test_i1_nonnegative_random(self):
        gen = np.random.default_rng(5)
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        for _ in range(10_000):
            omega = gen.dirichlet(np.ones(2))
            pi = product_measure(omega, kernel, ball_volume(2))
            pi = pi * np.exp(gen.normal(0, 0.5))
            assert rate_i1(omega, pi, kernel, 2) >= 0.0

    def test_i2_on_manifold(self):
        nu = np.array([0.4, 0.6])
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        ref = product_measure(nu, kernel, ball_volume(2))
        assert rate_i2(nu, ref, nu, kernel, 2) == 0.0
        omega = np.array([0.3, 0.7])
        ref_w = product_measure(omega, kernel, ball_volume(2))
        assert rate_i2(omega, ref_w, nu, kernel, 2) == rel_entropy_prob(omega, nu)

    def test_i2_off_manifold(self):
        nu = np.array([0.4, 0.6])
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        ref = product_measure(nu, kernel, ball_volume(2))
        tol = 1e-9
        off = ref.copy()
        off[0, 0] += 10 * tol
        assert rate_i2(nu, off, nu, kernel, 2, tol) == math.inf


def _two_vertex_edge_instance():
    spec = ModelSpec(d=2, alphabet=("a",), nu=np.array([1.0]), lam=np.array([[0.1]]))
    return Instance(
        spec=spec, n=2, seed=0,
        positions=np.array([[0.5, 0.5], [0.52, 0.5]]),
        colors=np.array([0, 0]),
        edges=np.array([[0, 1]]),
    )


class TestLogLikelihood:
    def test_single_vertex(self, spec_k2):
        inst = Instance(
            spec=spec_k2, n=1, seed=0,
            positions=np.array([[0.5, 0.5]]), colors=np.array([1]), edges=[],
        )
        assert log_likelihood(inst) == pytest.approx(math.log(0.6), rel=1e-15)

    def test_two_vertex_edge_frozen(self):
        inst = _two_vertex_edge_instance()
        assert log_likelihood(inst) == pytest.approx(LL_N2_EDGE, rel=1e-14)
        assert log_likelihood_naive(inst) == pytest.approx(LL_N2_EDGE, rel=1e-14)

    def test_zero_probability_edge(self):
        spec = ModelSpec(
            d=2, alphabet=("a", "b"), nu=np.array([0.5, 0.5]),
            lam=np.array([[0.1, 0.0], [0.0, 0.1]]),
        )
        inst = Instance(
            spec=spec, n=2, seed=0,
            positions=np.array([[0.5, 0.5], [0.52, 0.5]]),
            colors=np.array([0, 1]),
            edges=np.array([[0, 1]]),
        )
        assert log_likelihood(inst) == -math.inf
        assert log_likelihood_naive(inst) == -math.inf
        assert aep_statistic(inst) == math.inf

    @pytest.mark.parametrize("k", [1, 2, 3])
    @pytest.mark.parametrize("metric", list(MetricMode))
    def test_fast_equals_naive(self, k, metric):
        spec = spec_for(k, 2, metric)
        for seed in range(8):
            inst = generate(spec, 256, seed=seed)
            fast = log_likelihood(inst)
            naive = log_likelihood_naive(inst)
            assert fast == pytest.approx(naive, rel=1e-9)

    def test_rejects_empty(self, spec_k2):
        inst = Instance(
            spec=spec_k2, n=0, seed=0, positions=np.zeros((0, 2)), colors=[], edges=[],
        )
        with pytest.raises(ValueError):
            log_likelihood(inst)


class TestAepQuantities:
    def test_statistic_frozen_value(self):
        assert aep_statistic(_two_vertex_edge_instance()) == pytest.approx(
            AEP_N2, rel=1e-14
        )

    def test_limit_single_color(self):
        assert aep_limit(np.array([1.0]), np.array([[1.0]]), 2) == pytest.approx(
            PI_HALF, rel=1e-15
        )

    def test_limit_constant_kernel_independent_of_law(self):
        assert aep_limit(
            np.array([0.5, 0.5]), np.ones((2, 2)), 2
        ) == pytest.approx(PI_HALF, rel=1e-15)

    def test_limit_zero_kernel_on_support(self):
        nu = np.array([0.5, 0.5])
        kernel = np.zeros((2, 2))
        assert aep_limit(nu, kernel, 2) == 0.0

    def test_entropy_bits_single_color(self):
        assert entropy_bits(np.array([1.0]), np.array([[1.0]])) == pytest.approx(
            H_BITS_K1, rel=1e-14
        )

    def test_entropy_bits_zero_kernel(self):
        assert entropy_bits(np.array([0.5, 0.5]), np.zeros((2, 2))) == 0.0

    def test_code_length_identity(self):
        nu = np.array([0.4, 0.6])
        kernel = np.array([[1.0, 0.5], [0.5, 2.0]])
        for n in (4, 100, 4096):
            bits = code_length_bits(n, nu, kernel, 2)
            alt = n * math.log(n) ** 2 * aep_limit(nu, kernel, 2) / math.log(2.0)
            assert bits == pytest.approx(alt, rel=1e-12)


class TestExpectedNegLogLikelihood:
    def test_matches_direct_sum(self, spec_k2):
        n = 512
        from cgrg import connection_prob

        p = connection_prob(spec_k2, n)
        expected = n * -float(np.sum(spec_k2.nu * np.log(spec_k2.nu)))
        for a in range(2):
            for b in range(2):
                w = spec_k2.nu[a] * spec_k2.nu[b]
                pab = p[a, b]
                h = -pab * math.log(pab) - (1 - pab) * math.log1p(-pab)
                expected += n * (n - 1) / 2 * w * h
        assert expected_neg_log_likelihood(spec_k2, n) == pytest.approx(
            expected, rel=1e-13
        )

    def test_monte_carlo_agreement(self, spec_k1):
        # annealed expectation oracle: 500 replicates, 3 standard errors
        n, reps = 1024, 500
        vals = np.array(
            [-log_likelihood(generate(spec_k1, n, seed=s)) for s in range(reps)]
        )
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - expected_neg_log_likelihood(spec_k1, n)) <= 3 * se


class TestDecomposition:
    def test_terms_sum_to_statistic(self, spec_k2):
        for seed in (0, 1):
            inst = generate(spec_k2, 600, seed=seed)
            terms = loglik_decomposition(inst)
            total = (
                terms["term_colors"]
                + terms["term_edges"]
                + terms["term_pairs"]
                + terms["term_diag"]
            )
            assert total == pytest.approx(terms["aep_statistic"], rel=1e-11)

    def test_edge_term_dominates_at_scale(self, spec_k1):
        inst = generate(spec_k1, 16384, seed=3)
        terms = loglik_decomposition(inst)
        assert terms["term_edges"] > 0.8 * terms["aep_statistic"]
        for small in ("term_colors", "term_diag"):
            assert abs(terms[small]) < 0.02 * terms["aep_statistic"]
