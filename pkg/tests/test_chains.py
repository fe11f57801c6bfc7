import io
import math

import numpy as np
import pytest
from scipy import stats

from fixsim import (ChainKernel, GameSpec, InvalidPopulation, KernelKind, RngStream, monte_carlo_fixation,
                    simulate, solve_fixation, success_prob, verify_stochastic_monotonicity)
from fixsim.chains import (absorption_times, empirical_time_cdf, wf_log_row, write_trajectories_csv)
from fixsim.game import fitness


@pytest.fixture
def wf(game):
    return ChainKernel.wright_fisher(game, 12)


class TestKernels:
    def test_wf_row_is_binomial(self, game, wf):
        for i in range(13):
            expected = stats.binom.pmf(np.arange(13), 12, success_prob(game, 12, i))
            assert np.allclose(wf.row(i), expected, atol=1e-15)

    @pytest.mark.parametrize("kind", list(KernelKind))
    def test_rows_are_stochastic(self, game, kind):
        P = ChainKernel(kind, game, 15).matrix()
        assert np.all(P >= 0)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-13)
        assert P[0, 0] == P[15, 15] == 1.0

    def test_moran_probabilities(self, game):
        k = ChainKernel.moran(game, 10)
        xi = success_prob(game, 10, 4)
        row = k.row(4)
        assert row[5] == pytest.approx(0.6 * xi)
        assert row[3] == pytest.approx(0.4 * (1 - xi))

    def test_embedded_chain_drops_the_lazy_step(self, game):
        moran = ChainKernel.moran(game, 10).row(4)
        jump = ChainKernel.embedded_moran(game, 10).row(4)
        assert jump[4] == 0.0
        assert jump[5] == pytest.approx(moran[5] / (moran[3] + moran[5]), rel=1e-13)
        f, g = fitness(game, 10, 4)
        assert jump[5] == pytest.approx(f / (f + g), rel=1e-13)

    def test_log_row_survives_underflow(self, game):
        log_row = wf_log_row(game, 2000, 1)
        assert np.all(np.isfinite(log_row[:50]))
        assert log_row[-1] < -700

    def test_state_out_of_range(self, wf):
        with pytest.raises(InvalidPopulation):
            wf.row(13)

    def test_step_inverts_the_cdf(self, wf):
        cdf = wf.cdf(5)
        for u in (0.0, 0.1, 0.5, 0.999999):
            j = wf.step(5, u)
            assert (cdf[j - 1] if j else 0.0) <= u < cdf[j]

    def test_absorbing_states_fixed(self, wf):
        assert wf.step(0, 0.7) == 0 and wf.step(12, 0.2) == 12


class TestSimulation:
    def test_same_stream_same_path(self, wf):
        a = simulate(wf, 3, rng=RngStream(7, 2))
        b = simulate(wf, 3, rng=RngStream(7, 2))
        assert a == b

    def test_streams_differ(self, wf):
        paths = {simulate(wf, 3, rng=RngStream(7, r)).states for r in range(20)}
        assert len(paths) > 1

    def test_censoring(self, game):
        k = ChainKernel.wright_fisher(game.replace(w=0.0), 1000)
        t = simulate(k, 500, max_steps=3, rng=RngStream(1))
        assert t.censored and t.steps == 3 and len(t.states) == 4

    def test_thinning_keeps_final_state(self, game):
        k = ChainKernel.wright_fisher(game, 2000)
        t = simulate(k, 5, rng=RngStream(3), thin=10)
        assert t.states[-1] == t.absorbed_at

    def test_mc_agrees_with_exact(self, game):
        k = ChainKernel.wright_fisher(game, 30)
        exact = solve_fixation(k)[2]
        est = monte_carlo_fixation(k, 2, 4000, seed=11)
        assert abs(est.point - exact) < 4 * est.std_error
        assert est.censored == 0 and not est.conditioned

    def test_mc_independent_of_worker_count(self, game):
        k = ChainKernel.wright_fisher(game, 20)
        one = monte_carlo_fixation(k, 1, 300, seed=5, workers=1)
        two = monte_carlo_fixation(k, 1, 300, seed=5, workers=2)
        assert one == two

    def test_moran_mc(self, game):
        k = ChainKernel.moran(game, 15)
        est = monte_carlo_fixation(k, 3, 2000, seed=2)
        assert abs(est.point - solve_fixation(k)[3]) < 4 * est.std_error

    def test_time_cdf_monotone(self, game):
        k = ChainKernel.wright_fisher(game, 50)
        cdf = empirical_time_cdf(k, 1, 2000, seed=3, horizons=[0, 1, 2, 5, 20])
        values = [p.p for p in cdf]
        assert values[0] == 0.0
        assert values == sorted(values)

    def test_absorption_times_marks_transient(self, game):
        k = ChainKernel.wright_fisher(game.replace(w=0.0), 400)
        times = absorption_times(k, 200, 20, seed=1, horizon=2)
        assert np.all(times == -1)

    def test_trajectory_csv(self, wf):
        t = simulate(wf, 3, rng=RngStream(0))
        buf = io.StringIO()
        write_trajectories_csv(buf, [t, t])
        lines = buf.getvalue().splitlines()
        assert lines[0] == "replica,step,state"
        assert len(lines) == 1 + 2 * len(t.states)


class TestMonotonicity:
    @pytest.mark.parametrize("N", [2, 3, 10, 60])
    def test_reference_game(self, game, N):
        rep = verify_stochastic_monotonicity(ChainKernel.wright_fisher(game, N), exhaustive=N <= 10)
        assert rep.ok

    def test_exhaustive_matches_neighbours(self, game):
        k = ChainKernel.wright_fisher(game, 25)
        assert verify_stochastic_monotonicity(k).ok == verify_stochastic_monotonicity(k, exhaustive=True).ok

    def test_rejects_other_kernels(self, game):
        with pytest.raises(ValueError):
            verify_stochastic_monotonicity(ChainKernel.moran(game, 10))
