import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixsim import (CapExceeded, ChainKernel, DomainExit, GameSpec, KernelKind, certify_dominance,
                    check_one_step_martingale, moran_closed_form, moran_closed_form_vector,
                    parameter_sensitivity, solve_fixation)
from fixsim.exact import (in_sensitivity_domain, one_step_ratio, solve_absorption_reduced,
                          write_fixation_csv)

# 40-digit mpmath solves of the same systems, frozen
WF10 = [0.31738873341991732, 0.52739787597975927, 0.67058197564267206, 0.77067424028401022,
        0.8421449693285102, 0.89412361012631251, 0.9325389247998953, 0.96133769542790177,
        0.98320444449436536]
MORAN20_HEAD = [0.19366888805682324, 0.34734946319503116, 0.47005095006427226,
                0.56859114029130758, 0.64816699202181913]

specs = st.builds(
    lambda c, d, da, db, w: GameSpec(c + da, d + db, c, d, w),
    st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(0.05, 5.0), st.floats(0.05, 5.0),
    st.floats(0.02, 0.98),
)


class TestSolver:
    def test_matches_high_precision_oracle(self, game):
        fix = solve_fixation(ChainKernel.wright_fisher(game, 10))
        assert np.allclose(fix.p[1:10], WF10, rtol=1e-13)
        assert fix.p[0] == 0.0 and fix.p[10] == 1.0
        assert fix.residual < 1e-14

    @pytest.mark.parametrize("N", [2, 7, 60])
    def test_neutral(self, N):
        fix = solve_fixation(ChainKernel.wright_fisher(GameSpec(4, 2, 3, 1, 0.0), N))
        assert np.allclose(fix.p, np.arange(N + 1) / N, atol=1e-12)

    def test_cap(self, game):
        with pytest.raises(CapExceeded):
            solve_fixation(ChainKernel.wright_fisher(game, 50), cap=40)

    def test_reduction_route_agrees(self, game):
        k = ChainKernel.wright_fisher(game, 40)
        pair = solve_absorption_reduced(k)
        assert np.allclose(pair.fix, solve_fixation(k).p, atol=1e-13)
        assert np.allclose(pair.fix + pair.ext, 1.0, atol=1e-13)

    def test_reduction_resolves_tiny_extinction(self):
        spec = GameSpec(9.0, 9.0, 0.2, 0.2, 0.95)
        pair = solve_absorption_reduced(ChainKernel.wright_fisher(spec, 25))
        assert 0.0 < pair.ext[24] < 1e-30
        assert np.all(np.diff(np.log(pair.ext[1:25])) < 0)

    @settings(max_examples=25, deadline=None)
    @given(spec=specs, N=st.integers(3, 40))
    def test_above_neutral_and_increasing(self, spec, N):
        cert = certify_dominance(spec)
        N = max(N, cert.N0)
        p = solve_fixation(ChainKernel.wright_fisher(spec, N)).p
        interior = np.arange(1, N)
        assert np.all(p[interior] > interior / N - 1e-15)
        assert np.all(np.diff(p) >= -1e-15)
        # strict order is only resolvable near i = N on the extinction side
        ext = solve_absorption_reduced(ChainKernel.wright_fisher(spec, N)).ext
        assert np.all(np.diff(ext) < 0)


class TestMoran:
    def test_closed_form_oracle(self, game):
        p = moran_closed_form_vector(game, 20)
        assert np.allclose(p[1:6], MORAN20_HEAD, rtol=1e-13)

    def test_scalar_matches_vector(self, game):
        p = moran_closed_form_vector(game, 30)
        assert all(moran_closed_form(game, 30, i) == pytest.approx(p[i], rel=1e-13) for i in range(31))

    @pytest.mark.parametrize("N", [2, 5, 50])
    def test_three_routes(self, game, N):
        closed = moran_closed_form_vector(game, N)
        lazy = solve_fixation(ChainKernel.moran(game, N)).p
        jump = solve_fixation(ChainKernel.embedded_moran(game, N)).p
        assert np.allclose(closed, lazy, atol=1e-12)
        assert np.allclose(closed, jump, atol=1e-12)

    def test_large_N_no_underflow(self, game):
        p = moran_closed_form_vector(game, 20_000)
        assert np.all(np.isfinite(p)) and p[1] > 0


class TestMartingale:
    @pytest.mark.parametrize("N", [4, 5, 20, 200])
    def test_wright_fisher_bases(self, game, N):
        cert = certify_dominance(game)
        k = ChainKernel.wright_fisher(game, N)
        assert check_one_step_martingale(k, cert.rho, "sub").ok
        assert check_one_step_martingale(k, cert.theta, "super").ok

    def test_moran_bases(self, game):
        cert = certify_dominance(game)
        k = ChainKernel.moran(game, 100)
        assert check_one_step_martingale(k, cert.gamma, "sub").ok
        assert check_one_step_martingale(k, cert.alpha, "super").ok

    def test_generating_function_matches_row_sum(self, game):
        k = ChainKernel.wright_fisher(game, 15)
        base = 0.8
        direct = np.array([k.row(i) @ base ** np.arange(16) / base**i for i in range(1, 15)])
        assert np.allclose(one_step_ratio(k, base), direct, rtol=1e-12)

    def test_wrong_direction_detected(self, game):
        cert = certify_dominance(game)
        rep = check_one_step_martingale(ChainKernel.wright_fisher(game, 30), cert.rho, "super")
        assert not rep.ok and rep.max_violation > 0

    def test_base_validation(self, game):
        with pytest.raises(ValueError):
            check_one_step_martingale(ChainKernel.wright_fisher(game, 10), 1.0, "sub")


SIGNS = {"a": 1, "b": 1, "c": -1, "d": -1, "w": 1}


class TestSensitivity:
    @pytest.mark.parametrize("param", "abcdw")
    def test_reference_signs(self, game, param):
        for i in (1, 5, 9):
            assert np.sign(parameter_sensitivity(game, 10, i, param)) == SIGNS[param]

    @pytest.mark.parametrize("param", "ad")
    def test_N2_exclusion_is_flat(self, game, param):
        assert parameter_sensitivity(game, 2, 1, param) == 0.0

    def test_matches_analytic_N2(self, game):
        # p_2(1) = xi^2 / (xi^2 + (1 - xi)^2) with xi = f/(f+g), f = 1-w+wb, g = 1-w+wc
        def p(b):
            f, g = 0.7 + 0.3 * b, 0.7 + 0.9
            xi = f / (f + g)
            return xi**2 / (xi**2 + (1 - xi) ** 2)
        expected = (p(2 + 1e-6) - p(2 - 1e-6)) / 2e-6
        assert parameter_sensitivity(game, 2, 1, "b") == pytest.approx(expected, rel=1e-6)

    def test_domain_exit(self):
        spec = GameSpec(2.0, 2.0, 2.0 - 1e-7, 1.0, 0.5)
        with pytest.raises(DomainExit):
            parameter_sensitivity(spec, 10, 3, "c")
        with pytest.raises(DomainExit):
            parameter_sensitivity(GameSpec(4, 2, 3, 1, 1.0), 10, 3, "w")

    def test_domain(self, game):
        assert in_sensitivity_domain(game)
        assert not in_sensitivity_domain(game.replace(w=1.0))

    def test_unknown_parameter(self, game):
        with pytest.raises(ValueError):
            parameter_sensitivity(game, 10, 3, "z")


def test_fixation_csv(game):
    fix = solve_fixation(ChainKernel.wright_fisher(game, 5))
    buf = io.StringIO()
    write_fixation_csv(buf, fix)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "i,p_lower_bound,p,p_upper_bound"
    assert lines[1] == "0,,0,"
    assert len(lines) == 7
