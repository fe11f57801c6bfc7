"""Exponential bounds around exact fixation probabilities.

The dominance certificate yields two bases; the resulting profiles
(1 - base^i)/(1 - base^N) sandwich the exact Wright-Fisher values, and the
analogous pair sandwiches the Moran chain.
"""
from fixsim import (ChainKernel, GameSpec, certify_dominance, moran_closed_form_vector, moran_fixation_bounds,
                    moran_limit, solve_fixation, wf_fixation_bounds, wf_limit)

spec = GameSpec(4.0, 2.0, 3.0, 1.0, 0.3)
cert = certify_dominance(spec)
print("certificate:", {k: round(v, 5) if isinstance(v, float) else v for k, v in cert.as_dict().items()})

N = 200
wf = solve_fixation(ChainKernel.wright_fisher(spec, N)).p
moran = moran_closed_form_vector(spec, N)
print(f"\n{'i':>3} {'WF low':>8} {'WF exact':>9} {'WF high':>8} {'limit':>7}   {'Moran low':>9} {'exact':>7} {'high':>7}")
for i in (1, 2, 3, 5, 10):
    w = wf_fixation_bounds(cert, N, i)
    m = moran_fixation_bounds(cert, N, i)
    print(f"{i:3d} {w.lower:8.4f} {wf[i]:9.4f} {w.upper:8.4f} {wf_limit(cert, i):7.4f}   "
          f"{m.lower:9.4f} {moran[i]:7.4f} {m.upper:7.4f}  (Moran limit {moran_limit(cert, i):.4f})")
