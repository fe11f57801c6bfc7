import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fixsim import (BelowN0, BoundReport, ChainKernel, GameSpec, NotPD, TightnessKind, certify_dominance,
                    classify_pd_tightness, moran_closed_form_vector, moran_fixation_bounds, moran_limit,
                    solve_fixation, solve_q, wf_fixation_bounds, wf_limit)
from fixsim.bounds import BoundSource, exponential_profile, write_bounds_csv


class TestProfile:
    def test_endpoints(self):
        assert exponential_profile(0.5, 10, 0) == 0.0
        assert exponential_profile(0.5, 10, 10) == 1.0

    def test_near_one_tends_to_neutral(self):
        assert exponential_profile(1 - 1e-12, 10, 3) == pytest.approx(0.3, rel=1e-9)

    def test_by_hand(self):
        assert exponential_profile(0.5, 3, 1) == pytest.approx(0.5 / 0.875)


class TestSandwich:
    @pytest.mark.parametrize("N", [4, 10, 100])
    def test_wright_fisher(self, game, N):
        cert = certify_dominance(game)
        p = solve_fixation(ChainKernel.wright_fisher(game, N)).p
        for i in range(N + 1):
            rep = wf_fixation_bounds(cert, N, i)
            assert rep.source is BoundSource.WF_THM31
            assert rep.contains(p[i], tol=1e-13)

    @pytest.mark.parametrize("N", [4, 30, 300])
    def test_moran(self, game, N):
        cert = certify_dominance(game)
        p = moran_closed_form_vector(game, N)
        assert all(moran_fixation_bounds(cert, N, i).contains(p[i], tol=1e-13) for i in range(N + 1))

    def test_below_N0(self):
        spec = GameSpec(3.1, 2.0, 3.0, 0.1, 0.5)
        cert = certify_dominance(spec)
        assert cert.N0 > 3
        with pytest.raises(BelowN0):
            wf_fixation_bounds(cert, cert.N0 - 1, 1)
        with pytest.raises(BelowN0):
            moran_fixation_bounds(cert, cert.N0 - 1, 1)

    def test_report_validation(self):
        with pytest.raises(ValueError):
            BoundReport(10, 1, 0.6, 0.5, BoundSource.LIMIT)


class TestLimits:
    def test_wright_fisher_limit(self, game):
        cert = certify_dominance(game)
        q = solve_q(1.3).q
        assert wf_limit(cert, 3) == pytest.approx(1 - q**3)

    def test_moran_limit(self, game):
        cert = certify_dominance(game)
        assert moran_limit(cert, 2) == pytest.approx(1 - 1.3**-2)

    def test_limits_inside_limiting_bounds(self, game):
        cert = certify_dominance(game)
        for i in range(1, 8):
            assert 1 - cert.rho**i <= wf_limit(cert, i) <= 1 - cert.theta**i
            assert 1 - cert.gamma**i <= moran_limit(cert, i) <= 1 - cert.alpha**i + 1e-12


pd_specs = st.builds(
    lambda c, x, y, z, w: GameSpec(c + x, c + x + y + z, c, c + x + y, w),
    st.floats(0.1, 3.0), st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(0.05, 3.0),
    st.floats(0.01, 1.0),
)


class TestPDTightness:
    @pytest.mark.parametrize("payoffs, kind, threshold", [
        ((3.0, 4.0, 1.0, 3.5), TightnessKind.ALWAYS_TIGHT, None),
        ((2.0, 5.0, 1.0, 3.0), TightnessKind.TIGHT_IFF_W_GEQ, 0.5),
        ((2.0, 6.0, 1.0, 3.0), TightnessKind.TIGHT_ONLY_W1, None),
        ((2.0, 10.0, 1.0, 3.0), TightnessKind.NEVER_TIGHT, None),
    ])
    def test_scenarios(self, payoffs, kind, threshold):
        res = classify_pd_tightness(GameSpec(*payoffs, 0.5))
        assert res.kind is kind
        if threshold is not None:
            assert res.threshold == pytest.approx(threshold)

    def test_not_pd(self, game):
        with pytest.raises(NotPD):
            classify_pd_tightness(game)

    @settings(max_examples=200, deadline=None)
    @given(spec=pd_specs)
    def test_agrees_with_direct_comparison(self, spec):
        res = classify_pd_tightness(spec)
        assert res.kind is not TightnessKind.INFEASIBLE
        for w in np.linspace(0.01, 1.0, 23):
            s = spec.replace(w=float(w))
            lam = s.base_fitness(s.b) / s.base_fitness(s.d)
            other = s.base_fitness(s.a) / s.base_fitness(s.c)
            margin = other - lam
            if abs(margin) < 1e-9:
                continue
            assert res.holds_at(float(w)) == (margin > 0)


def test_bounds_csv(game):
    cert = certify_dominance(game)
    buf = io.StringIO()
    write_bounds_csv(buf, [(wf_fixation_bounds(cert, 10, 2), 0.5), (wf_fixation_bounds(cert, 10, 3), None)])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "N,i,lower,exact,upper,source"
    assert lines[1].endswith(",WF_Thm31") and ",0.5," in lines[1]
    assert ",," in lines[2]
