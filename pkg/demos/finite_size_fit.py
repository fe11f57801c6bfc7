"""Fitting p_N(i) = 1 - q_N^i and watching q_N approach the branching value q.

Exact fixation probabilities for i = 1..10 are fitted by least squares; the
gap q_N - q shrinks roughly like 1/N.
"""
from fixsim import GameSpec, certify_dominance, solve_q
from fixsim.experiments import table1

spec = GameSpec(4.0, 2.0, 3.0, 1.0, 0.3)
q = solve_q(certify_dominance(spec).lam).q
print(f"branching extinction probability q = {q:.6f}")

for row in table1(spec, Ns=(10, 20, 50, 100, 500, 1000)):
    print(f"N={row.N:5d}  q_N={row.q_N:.5f}  q_N - q={row.q_N_minus_q:.5f}  N*(q_N - q)={row.N * row.q_N_minus_q:.3f}")
