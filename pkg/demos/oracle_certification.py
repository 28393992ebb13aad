"""Certify fits against the exhaustive grid oracle on tiny instances.

The oracle enumerates (via an exact dynamic program) every polyline whose
vertices lie on an h-grid over the atom bounding box, so a fit passing
`fit_energy <= oracle_energy + C*h` is provably near-optimal. Useful as a
ground truth when changing the optimizer.
"""

import numpy as np

from pencurve import DiscreteMeasure, FitConfig, fit
from pencurve.oracle import OracleConfig, certify_fit

rng = np.random.default_rng(2024)
for trial in range(5):
    n = int(rng.integers(3, 6))
    mu = DiscreteMeasure(rng.uniform(0, 1, (n, 2)), np.full(n, 1.0 / n))
    p = float(rng.choice([1.0, 2.0]))
    lam = float(rng.choice([0.05, 0.2]))
    res = fit(mu, FitConfig(p=p, lam=lam, m_init=3, restarts=6, seed=trial))
    rec = certify_fit(mu, res.curve, OracleConfig(m=3, h=0.02, p=p, lam=lam))
    print(f"trial {trial}: n={n} p={p} lam={lam:4.2f}  fit {rec['fit_energy']:.6f}  "
          f"oracle {rec['oracle_energy']:.6f}  gap {rec['gap']:+.2e}  -> {rec['status']}")
