"""m_K(t) for the last passage of exp(B_t - t/2) at level K.

Draws one curve per K = 0.1, ..., 1.0 on (0, 5], marks where each one
peaks, and writes ``figure1.svg``.

    python scripts/figure1_exp_curves.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from nstime import ModelSpec, m_of, sup_m
from nstime.svgplot import render

out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
out.mkdir(parents=True, exist_ok=True)

ts = np.linspace(0.0, 5.0, 500)
series = []
for K in np.round(np.arange(1, 11) / 10, 1):
    model = ModelSpec.exp(K)
    ms = [m_of(model, t) for t in ts]
    series.append((f"K={K:.1f}", ts, ms))

    # the curve starts at 0 (Z_0 = 1), rises, and dies out as M_t -> 0
    peak = sup_m(model)
    print(f"K={K:.1f}  t*={peak.t_star:8.4f}  m*={peak.m_star:.6f}")

(out / "figure1.svg").write_text(render(series, xlabel="t", ylabel="m_K(t)"))
print(f"wrote {out / 'figure1.svg'}")
