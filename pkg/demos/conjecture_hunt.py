"""Search for self-intersecting stationary curves at small p.

For p >= 2 (and for measures with bounded density at any p >= 1) minimizing
curves are provably injective; whether non-injective global minimizers
exist for 1 <= p < 2 with singular measures is open. This harness fits
random singular instances with restarts and records any stationary result
that crosses itself. Candidates are leads, not proofs: each would still
need its global optimality established independently (e.g. by the oracle
on a fine grid).
"""

from pencurve import conjecture_search

print("p = 2 control (should stay empty):")
control = conjecture_search(p=2.0, budget=15, seed=7, restarts=2)
print(f"  {len(control)} candidates")

print("p = 1 hunt over random weighted atom sets:")
found = conjecture_search(p=1.0, budget=15, seed=7, restarts=4)
print(f"  {len(found)} candidates")
for cand in found:
    print(f"  instance {cand['instance']}: lam={cand['lambda']:.3f} "
          f"energy={cand['energy']:.5f} crossings={len(cand['intersections'])} "
          f"residual={cand['max_free_residual']:.2e}")
if not found:
    print("  none this run; widen the budget or the lambda range to keep hunting")
