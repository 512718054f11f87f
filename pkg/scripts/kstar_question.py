"""Does sup_t m_K(t) increase with K?

Scans a fine grid of levels and reports the first place where the
supremum decreases, if any.  This is numerical evidence, not a proof.

    python scripts/kstar_question.py
"""

import numpy as np

from nstime.models import kstar_experiment

grid = np.round(np.linspace(0.01, 1.0, 100), 10)
exp = kstar_experiment(grid)
m_star = np.array([r.m_star for r in exp.rows])
t_star = np.array([r.t_star for r in exp.rows])

print(f"K from {grid[0]} to {grid[-1]}: m* from {m_star[0]:.5f} to {m_star[-1]:.5f}")
print(f"t* shrinks from {t_star[0]:.3f} to {t_star[-1]:.3f}")
steps = np.diff(m_star)
print(f"smallest increment of m* between neighbours: {steps.min():.3e}")
print("nondecreasing on this grid:", exp.monotone_nondecreasing)
