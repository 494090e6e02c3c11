import math

import numpy as np
import pytest

from frcfr.bounds import (
    blackwell_check,
    gordon_G,
    gordon_gamma,
    odp_bound,
    rcfr_bound,
)
from frcfr.efg import build_tree
from frcfr.games import leduc
from frcfr.links import LinkSpec, gordon_g
from frcfr.matcher import policy_from_estimates
from frcfr.odp import TransformationKind, enumerate_transformations

ALL_SPECS = [LinkSpec.poly(1.5), LinkSpec.poly(2.0), LinkSpec.poly(3.0),
             LinkSpec.exp(0.1), LinkSpec.exp(1.0)]


class TestOdpBound:
    def test_p2_example(self):
        assert odp_bound(LinkSpec.poly(2.0), 100, 1.0, 1.0, 0.0) == pytest.approx(0.2)

    def test_exp_example(self):
        want = math.log(3.0) / 100 + 2.0
        assert odp_bound(LinkSpec.exp(1.0), 100, 1.0, 3.0, 0.0) == pytest.approx(want)

    def test_p3_example(self):
        want = math.sqrt(512.0) / 64
        assert odp_bound(LinkSpec.poly(3.0), 64, 1.0, 1.0, 0.0) == pytest.approx(want)

    def test_nonincreasing_in_t_without_error(self):
        for spec in ALL_SPECS:
            vals = [odp_bound(spec, t, 1.0, 2.0 if spec.family.value == "poly" else 3.0, 0.0)
                    for t in (1, 2, 5, 10, 100, 1000)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_exp_floor(self):
        u, tau = 2.0, 0.5
        floor = 2 * u * u / tau
        for t in (1, 10, 10_000, 10_000_000):
            assert odp_bound(LinkSpec.exp(tau), t, u, 4.0, 0.0) >= floor

    def test_input_validation(self):
        with pytest.raises(ValueError):
            odp_bound(LinkSpec.poly(2.0), 0, 1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            odp_bound(LinkSpec.poly(2.0), 5, 1.0, 1.0, -1.0)


class TestRcfrBound:
    def test_single_state_reduces_to_odp_bound(self):
        got = rcfr_bound(LinkSpec.poly(2.0), 100, 1.0, [2], [0.0])
        assert got.per_state == pytest.approx(0.2)
        assert got.uniform == pytest.approx(0.2)

    def test_per_state_never_exceeds_uniform(self):
        rng = np.random.default_rng(0)
        for spec in ALL_SPECS:
            for _ in range(50):
                n = int(rng.integers(1, 40))
                counts = rng.integers(1, 6, size=n)
                errors = rng.uniform(0, 10, size=n)
                b = rcfr_bound(spec, int(rng.integers(1, 1000)), 2.0, counts, errors)
                assert b.per_state <= b.uniform + 1e-9

    def test_leduc_closed_form_sum(self):
        # Independent arithmetic: the 936-term p=2 sum at t=10 with zero
        # errors is sum_s sqrt(t * 4 U^2 (|A(s)| - 1)) / t.
        tree = build_tree(leduc())
        t, u = 10, tree.utility_bound
        for p in range(2):
            counts = tree.players[p].n_actions
            want = sum(math.sqrt(t * 4.0 * u * u * (int(k) - 1)) for k in counts) / t
            got = rcfr_bound(LinkSpec.poly(2.0), t, u, counts, np.zeros(len(counts)))
            assert got.per_state == pytest.approx(want, rel=1e-12)

    def test_p2_classic_shape(self):
        # Zero-error p=2 bound scales as |S| * 2U sqrt(|A|-1) / sqrt(t).
        u, t = 1.5, 400
        counts = [3] * 7
        got = rcfr_bound(LinkSpec.poly(2.0), t, u, counts, np.zeros(7))
        want = 7 * 2 * u * math.sqrt(2.0) / math.sqrt(t)
        assert got.per_state == pytest.approx(want, rel=1e-12)

    def test_error_length_mismatch(self):
        with pytest.raises(ValueError):
            rcfr_bound(LinkSpec.poly(2.0), 10, 1.0, [2, 2], [0.0])


class TestBlackwellCheck:
    def test_equal_estimates_give_zero_lhs(self):
        from frcfr.links import link

        rng = np.random.default_rng(1)
        for spec in ALL_SPECS:
            for _ in range(50):
                n = int(rng.integers(2, 5))
                phi = enumerate_transformations(TransformationKind.EXTERNAL, n)
                regrets = rng.uniform(-4, 4, n)
                reward = rng.uniform(-1, 1, n)
                sigma = policy_from_estimates(spec, regrets, phi).distribution
                chk = blackwell_check(spec, regrets, regrets, sigma, reward, 1.0)
                assert chk.passed
                assert chk.rhs == pytest.approx(0.0, abs=1e-12)
                # Zero up to rounding at the link-output scale.
                scale = max(np.abs(link(spec, regrets)).sum(), 1.0)
                assert abs(chk.lhs) <= 1e-8 * scale

    def test_adversarial_reward_grid(self):
        # R=(1,0), estimates=(0,1), p=2, U=1: rhs = 2 * ||(1,0)-(0,1)||_1 = 4;
        # the worst reward on a dense grid stays below it.
        spec = LinkSpec.poly(2.0)
        phi = enumerate_transformations(TransformationKind.EXTERNAL, 2)
        regrets = np.array([1.0, 0.0])
        estimates = np.array([0.0, 1.0])
        sigma = policy_from_estimates(spec, estimates, phi).distribution
        worst = -np.inf
        for r0 in np.linspace(-1, 1, 41):
            for r1 in np.linspace(-1, 1, 41):
                chk = blackwell_check(spec, regrets, estimates, sigma, [r0, r1], 1.0)
                assert chk.rhs == pytest.approx(4.0)
                assert chk.passed
                worst = max(worst, chk.lhs)
        assert worst <= 4.0

    def test_random_battery(self):
        rng = np.random.default_rng(2)
        for spec in ALL_SPECS:
            for _ in range(200):
                n = int(rng.integers(2, 5))
                phi = enumerate_transformations(TransformationKind.EXTERNAL, n)
                regrets = rng.uniform(-5, 5, n)
                estimates = regrets + rng.uniform(-3, 3, n)
                reward = rng.uniform(-1, 1, n)
                sigma = policy_from_estimates(spec, estimates, phi).distribution
                assert blackwell_check(spec, regrets, estimates, sigma, reward, 1.0).passed

    def test_exp_overflow_switches_to_g_space(self):
        spec = LinkSpec.exp(0.1)
        phi = enumerate_transformations(TransformationKind.EXTERNAL, 2)
        regrets = np.array([500.0, 0.0])  # exp(5000) overflows float64
        estimates = np.array([400.0, 10.0])
        sigma = policy_from_estimates(spec, estimates, phi).distribution
        chk = blackwell_check(spec, regrets, estimates, sigma, [1.0, -1.0], 1.0)
        assert chk.g_space
        assert chk.passed
        assert np.isfinite(chk.lhs) and np.isfinite(chk.rhs)


class TestGordonTriple:
    def test_triple_inequality_spot_check(self):
        # G(x + y) <= G(x) + g(x) . y + gamma(y) on random pairs; a numeric
        # sanity check of the potential framework, not a proof.
        rng = np.random.default_rng(3)
        for spec in ALL_SPECS:
            for _ in range(300):
                n = int(rng.integers(2, 6))
                x = rng.uniform(-5, 5, n)
                y = rng.uniform(-5, 5, n)
                lhs = gordon_G(spec, x + y)
                rhs = gordon_G(spec, x) + gordon_g(spec, x) @ y + gordon_gamma(spec, y)
                assert lhs <= rhs + 1e-9 * (1 + abs(rhs))
