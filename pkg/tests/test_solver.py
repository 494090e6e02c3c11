import numpy as np
import pytest

from frcfr.bounds import rcfr_bound
from frcfr.efg import best_response_value, build_tree, exploitability_milli
from frcfr.games import make_game, one_card_poker
from frcfr.links import LinkSpec
from frcfr.matcher import policy_from_estimates
from frcfr.odp import TransformationKind, enumerate_transformations
from frcfr.solver import (
    SolveConfig,
    SolveState,
    SolverDivergence,
    UpdateScheme,
    cadence_points,
    companion_map_vector,
    iterate,
    measured_avg_regret,
    policy_from_regret_vector,
    solve,
)

from .oracles import expected_utility_oracle


@pytest.fixture(scope="module")
def kuhn():
    return build_tree(one_card_poker())


@pytest.fixture(scope="module")
def rps():
    return build_tree(make_game("rps"))


class TestCadence:
    def test_log_grid(self):
        pts = cadence_points(100, "log")
        assert pts[0] == 1
        assert pts[-1] == 100
        assert pts == sorted(set(pts))

    def test_numeric_grid(self):
        assert cadence_points(10, 3) == [3, 6, 9, 10]

    def test_cadence_beyond_horizon_single_trailing_point(self):
        assert cadence_points(5, 100) == [5]

    def test_invalid_cadence_rejected(self):
        with pytest.raises(ValueError):
            SolveConfig(game="rps", link=LinkSpec.poly(2.0), iterations=5, cadence=0)
        with pytest.raises(ValueError):
            SolveConfig(game="rps", link=LinkSpec.poly(2.0), iterations=5, cadence="weird")


class TestIterate:
    def test_first_iteration_policy_is_uniform(self, kuhn):
        for spec in (LinkSpec.poly(2.0), LinkSpec.exp(0.5)):
            cfg = SolveConfig(game="one_card_poker", link=spec, iterations=1)
            state = SolveState.create(kuhn, cfg)
            iterate(state)
            for p in range(2):
                ix = kuhn.players[p]
                want = 1.0 / ix.n_actions[ix.state_of_seq[1:]]
                np.testing.assert_allclose(state.last_profile.policies[p][1:], want)

    def test_vectorised_policy_matches_matcher(self, kuhn):
        rng = np.random.default_rng(0)
        for spec in (LinkSpec.poly(1.5), LinkSpec.poly(3.0), LinkSpec.exp(0.1)):
            for p in range(2):
                ix = kuhn.players[p]
                reg = np.zeros(ix.n_seq)
                reg[1:] = rng.uniform(-3, 3, ix.n_seq - 1)
                pol = policy_from_regret_vector(kuhn, p, reg, spec)
                for s in range(ix.n_states):
                    block = ix.block(s)
                    phi = enumerate_transformations(
                        TransformationKind.EXTERNAL, int(ix.n_actions[s])
                    )
                    want = policy_from_estimates(spec, reg[block], phi).distribution
                    np.testing.assert_allclose(pol[block], want, atol=1e-12)

    def test_companion_map_matches_scalar(self, kuhn):
        from frcfr.links import gordon_g

        rng = np.random.default_rng(1)
        for spec in (LinkSpec.poly(1.5), LinkSpec.poly(2.5), LinkSpec.exp(0.5)):
            p = 0
            ix = kuhn.players[p]
            reg = np.zeros(ix.n_seq)
            reg[1:] = rng.uniform(-3, 3, ix.n_seq - 1)
            vec = companion_map_vector(kuhn, p, reg, spec)
            for s in range(ix.n_states):
                block = ix.block(s)
                np.testing.assert_allclose(
                    vec[block], gordon_g(spec, reg[block]), atol=1e-12
                )

    def test_shadow_tables_match_instantaneous_sums(self, kuhn):
        from frcfr.efg import instantaneous_regrets

        cfg = SolveConfig(game="one_card_poker", link=LinkSpec.poly(2.0), iterations=1)
        state = SolveState.create(kuhn, cfg)
        totals = [np.zeros(kuhn.players[p].n_seq) for p in range(2)]
        for _ in range(30):
            pre = [state.predicted_regrets(p).copy() for p in range(2)]
            iterate(state)
            for p in range(2):
                totals[p] += instantaneous_regrets(kuhn, state.last_profile, p)
            del pre
        for p in range(2):
            np.testing.assert_allclose(state.regrets[p], totals[p], atol=1e-10)

    def test_divergence_detected(self, kuhn):
        cfg = SolveConfig(
            game="one_card_poker", link=LinkSpec.poly(2.0), iterations=1,
            n_partitions=1, m_buckets=2, lam=1e-3,
        )
        state = SolveState.create(kuhn, cfg)
        state.estimators[0]._groups[0].weights[:] = np.inf
        with pytest.raises(SolverDivergence):
            iterate(state)


class TestSolve:
    def test_rps_regret_matching_stays_at_equilibrium(self, rps):
        cfg = SolveConfig(game="rps", link=LinkSpec.poly(2.0), iterations=1000)
        res = solve(rps, cfg)
        early = res.rows[0]
        final = res.rows[-1]
        assert final.exploitability_milli <= early.exploitability_milli
        # Uniform-form closed bound with no approximation error.
        for p in range(2):
            counts = rps.players[p].n_actions
            bound = rcfr_bound(
                cfg.link, final.iteration, rps.utility_bound, counts,
                np.zeros(len(counts)),
            ).uniform
            assert final.exploitability_milli / 1000.0 <= 2 * bound

    def test_leduc_decreasing_trend(self):
        tree = build_tree(make_game("leduc"))
        cfg = SolveConfig(game="leduc", link=LinkSpec.poly(2.0), iterations=1000)
        res = solve(tree, cfg)
        assert res.rows[-1].exploitability_milli > 0.0
        assert res.rows[-1].exploitability_milli < res.rows[0].exploitability_milli

    def test_folk_theorem_consistency(self, kuhn):
        # Exploitability of the average profile never exceeds the summed
        # measured average-regret bounds, at every cadence point.
        for game in ("rps", "biased_mp", "one_card_poker"):
            tree = kuhn if game == "one_card_poker" else build_tree(make_game(game))
            cfg = SolveConfig(game=game, link=LinkSpec.poly(2.0), iterations=500)
            res = solve(tree, cfg)
            for row in res.rows:
                eps_sum = row.avg_regret[0] + row.avg_regret[1]
                assert row.exploitability_milli / 1000.0 <= eps_sum + 1e-9

    def test_cfr_decomposition_bounds_external_regret(self, kuhn):
        # Direct-definition external regret: best response against the
        # average opponent minus realised average utility.
        cfg = SolveConfig(game="one_card_poker", link=LinkSpec.poly(2.0), iterations=300)
        res = solve(kuhn, cfg)
        state = res.state
        avg = res.average
        for p in range(2):
            br = best_response_value(kuhn, avg.policies[1 - p], p)
            ext_regret = br - state.cum_util[p] / state.t
            assert ext_regret <= measured_avg_regret(state, p) + 1e-9

    def test_alternating_converges_faster_on_biased_mp(self):
        tree = build_tree(make_game("biased_mp"))
        res_alt = solve(
            tree,
            SolveConfig(
                game="biased_mp", link=LinkSpec.poly(2.0), iterations=4000,
                update=UpdateScheme.ALTERNATING,
            ),
        )
        assert res_alt.rows[-1].exploitability_milli < 2.0

    def test_bit_reproducible(self):
        tree = build_tree(make_game("leduc"))
        cfg = SolveConfig(
            game="leduc", link=LinkSpec.exp(0.1), iterations=40,
            n_partitions=10, seed=5,
        )
        a = solve(tree, cfg)
        b = solve(tree, cfg)
        for ra, rb in zip(a.rows, b.rows):
            assert ra.exploitability_milli == rb.exploitability_milli
            assert ra.avg_regret == rb.avg_regret
            assert ra.err_sum == rb.err_sum
            assert ra.bound == rb.bound
        for p in range(2):
            np.testing.assert_array_equal(a.average.policies[p], b.average.policies[p])

    def test_wrong_tree_rejected(self, rps):
        with pytest.raises(ValueError):
            solve(rps, SolveConfig(game="leduc", link=LinkSpec.poly(2.0), iterations=1))

    def test_function_approx_errors_nondecreasing(self):
        tree = build_tree(make_game("leduc"))
        cfg = SolveConfig(
            game="leduc", link=LinkSpec.poly(2.0), iterations=60, n_partitions=5
        )
        res = solve(tree, cfg)
        for p in range(2):
            series = [row.err_sum[p] for row in res.rows]
            assert all(b >= a - 1e-12 for a, b in zip(series, series[1:]))
            assert series[-1] > 0.0

    def test_function_approx_bound_dominance(self):
        # With approximation the bound inflates by the accumulated error and
        # must still dominate the measured table regrets at every cadence
        # point.
        tree = build_tree(make_game("leduc"))
        for spec in (LinkSpec.exp(0.1), LinkSpec.poly(2.0)):
            cfg = SolveConfig(
                game="leduc", link=spec, iterations=150, n_partitions=30
            )
            res = solve(tree, cfg)
            for row in res.rows:
                for p in range(2):
                    assert row.avg_regret[p] <= row.bound[p] * (1 + 1e-9) + 1e-12

    def test_tabular_errors_stay_zero(self, kuhn):
        cfg = SolveConfig(game="one_card_poker", link=LinkSpec.poly(2.0), iterations=50)
        res = solve(kuhn, cfg)
        assert all(row.err_sum == (0.0, 0.0) for row in res.rows)

    def test_average_utility_matches_oracle(self, kuhn):
        # The tracked average profile is consistent with a terminal-sum
        # recomputation of its expected utility.
        from frcfr.efg import expected_utility

        cfg = SolveConfig(game="one_card_poker", link=LinkSpec.poly(2.0), iterations=120)
        res = solve(kuhn, cfg)
        got = expected_utility(kuhn, res.average, 0)
        want = expected_utility_oracle(kuhn, res.average, 0)
        assert got == pytest.approx(want, abs=1e-10)
