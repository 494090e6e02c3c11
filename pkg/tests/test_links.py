import decimal

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frcfr.links import LinkFamily, LinkSpec, gordon_g, link, link_error

finite_vectors = st.lists(
    st.floats(-50, 50, allow_nan=False, allow_infinity=False), min_size=1, max_size=6
)
specs = st.sampled_from(
    [LinkSpec.poly(1.1), LinkSpec.poly(1.5), LinkSpec.poly(2.0),
     LinkSpec.poly(2.5), LinkSpec.poly(3.0), LinkSpec.exp(0.1), LinkSpec.exp(1.0)]
)


class TestSpecValidation:
    def test_poly_requires_p_above_one(self):
        with pytest.raises(ValueError):
            LinkSpec.poly(1.0)

    def test_exp_requires_positive_tau(self):
        with pytest.raises(ValueError):
            LinkSpec.exp(0.0)


class TestLink:
    def test_relu(self):
        np.testing.assert_allclose(link(LinkSpec.poly(2.0), [-1.0, 2.0]), [0.0, 2.0])

    def test_squared_positive_part(self):
        np.testing.assert_allclose(link(LinkSpec.poly(3.0), [-1.0, 2.0]), [0.0, 4.0])

    def test_exp_at_zero(self):
        np.testing.assert_allclose(link(LinkSpec.exp(1.0), [0.0, 0.0]), [1.0, 1.0])

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            link(LinkSpec.poly(2.0), [np.inf, 0.0])
        with pytest.raises(ValueError):
            gordon_g(LinkSpec.exp(1.0), [np.nan])

    def test_exp_overflow_clamped_and_logged(self, caplog):
        with caplog.at_level("WARNING", logger="frcfr.links"):
            out = link(LinkSpec.exp(1.0), [20000.0, 0.0])
        assert np.all(np.isfinite(out))
        assert out[0] == np.finfo(np.float64).max
        assert any("overflow" in r.message for r in caplog.records)

    @given(specs, finite_vectors)
    @settings(max_examples=200, deadline=None)
    def test_outputs_nonnegative(self, spec, xs):
        assert np.all(link(spec, xs) >= 0.0)
        assert np.all(gordon_g(spec, xs) >= 0.0)


class TestGordonG:
    def test_p2_is_twice_link(self):
        rng = np.random.default_rng(0)
        spec = LinkSpec.poly(2.0)
        for _ in range(50):
            x = rng.uniform(-3, 3, 4)
            np.testing.assert_allclose(gordon_g(spec, x), 2.0 * link(spec, x), atol=1e-14)

    def test_exp_sums_to_one(self):
        rng = np.random.default_rng(1)
        for tau in (0.1, 1.0):
            for _ in range(50):
                x = rng.uniform(-40, 40, 5)
                assert gordon_g(LinkSpec.exp(tau), x).sum() == pytest.approx(1.0, abs=1e-12)

    def test_softmax_of_equal_logits(self):
        np.testing.assert_allclose(gordon_g(LinkSpec.exp(1.0), [0.0, 0.0]), [0.5, 0.5])

    def test_high_poly_at_ones(self):
        # Oracle: 2 * 1^3 / (1^4 + 1^4)^(2/4) = 2 / sqrt(2) = sqrt(2), computed
        # independently in high precision.
        decimal.getcontext().prec = 50
        want = float(decimal.Decimal(2) / decimal.Decimal(2).sqrt())
        got = gordon_g(LinkSpec.poly(4.0), [1.0, 1.0])
        np.testing.assert_allclose(got, [want, want], rtol=1e-12)

    def test_high_poly_zero_at_nonpositive(self):
        out = gordon_g(LinkSpec.poly(3.0), [-1.0, -2.0])
        np.testing.assert_array_equal(out, [0.0, 0.0])

    def test_policy_agrees_between_shifted_and_raw_exp(self):
        # Normalised fixed points from raw and shifted logits agree wherever
        # the raw form is finite, up to components of size 1e6 / tau.
        rng = np.random.default_rng(2)
        for tau in (0.1, 1.0):
            spec = LinkSpec.exp(tau)
            for _ in range(100):
                x = rng.uniform(-600 * tau, 600 * tau, 4)
                raw = np.exp(x / tau)
                if not np.all(np.isfinite(raw)):
                    continue
                direct = raw / raw.sum()
                shifted = gordon_g(spec, x)
                np.testing.assert_allclose(shifted, direct, atol=1e-9)
        # At extreme scale the shifted form still produces a finite policy.
        big = gordon_g(LinkSpec.exp(1.0), [1e6, 0.0, 5e5])
        assert np.all(np.isfinite(big))
        assert big.sum() == pytest.approx(1.0)


class TestLinkError:
    def test_identical(self):
        assert link_error([1.0, 2.0], [1.0, 2.0]) == 0.0

    def test_swap(self):
        assert link_error([1.0, 0.0], [0.0, 1.0]) == 2.0

    def test_arithmetic(self):
        assert link_error([0.3, 0.7], [0.5, 0.5]) == pytest.approx(0.4)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            link_error([1.0], [1.0, 2.0])
