"""Print the stability bound and its terms for each inverse problem.

Each bound is the sum of a data term, which grows with the noise level
epsilon, and a truncation term, which decays as the measurement window
(the band b or the largest speed Lambda) widens.  The table shows where
one takes over from the other.
"""
from wavesrc.bounds import BoundInputs, theorem_bound

M = 2.0
for problem, windows in (("ip1", (1.5, 2.0, 4.0, 8.0)), ("ip2", (1.5, 2.0, 4.0)), ("ip3", (1.5, 2.0, 4.0))):
    print(f"\n{problem}")
    for eps in (1e-6, 1e-3, 1e-1):
        for w in windows:
            res = theorem_bound(problem, BoundInputs(w, eps, M, R=1.0, R0=1.0, T0=1.0))
            terms = "  ".join(f"{name}={value:.3e}" for name, value in res.terms.items())
            print(f"  window={w:4.1f} eps={eps:6.0e}  total={res.total:.4e}  {terms}")
