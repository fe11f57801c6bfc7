"""Early extinction of a single mutant: Wright-Fisher against its branching approximation.

At N=2000 the chain started from one mutant behaves like a Poisson
Galton-Watson process for the first few generations. We print the empirical
probability of absorption by generation m next to the exact branching value
and the window that accounts for the coupling error. The coupling constant
C0 is estimated by simulation, so the window is indicative rather than proven.
"""
import math

from fixsim import ChainKernel, GameSpec, RngStream, certify_dominance, estimate_C0, extinction_cdf_exact
from fixsim import fixation_time_window
from fixsim.chains import empirical_time_cdf

spec = GameSpec(4.0, 2.0, 3.0, 1.0, 0.3)
cert = certify_dominance(spec)
N, J, eta = 2000, math.ceil(2000**0.6), 1.5

C0 = estimate_C0(spec, N, J, 20_000, RngStream(0, 99)).value
print(f"estimated C0 = {C0:.3f} over i = 1..{J}")

emp = empirical_time_cdf(ChainKernel.wright_fisher(spec, N), 1, 5000, seed=2, horizons=range(1, 6))
for point in emp:
    win = fixation_time_window(1, point.m, N, J, eta, C0, cert)
    bp = extinction_cdf_exact(cert.lam, 1, point.m)
    print(f"m={point.m}: WF {point.p:.4f}  branching {bp:.4f}  window [{win.lower:.4f}, {win.upper:.4f}]")
