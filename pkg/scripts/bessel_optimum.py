"""phi_mu(z), its maximizer z_mu and the bound m'_mu for Bessel last passages.

Prints the z_mu table for the half-integer indices, confirms that the
root of the optimum equation is where phi_mu peaks, and writes
``figure2.svg`` (phi_mu) and ``figure3.svg`` (m_mu and m'_mu against mu).

    python scripts/bessel_optimum.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from nstime import bessel_characteristics, phi_mu
from nstime.numerics import maximize_1d
from nstime.svgplot import render

out = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
out.mkdir(parents=True, exist_ok=True)

mus = [0.5, 1.0, 1.5, 2.5, 3.5, 4.5, 5.5, 6.5]
print(" mu     z_mu      argmax     m_mu      m'_mu")
for mu in mus:
    c = bessel_characteristics(mu)
    # direct maximization knows nothing about the root equation
    direct = maximize_1d(lambda z: phi_mu(mu, z), (1e-3, 20.0), tol=1e-10)
    print(f"{mu:4.1f}  {c.z_mu:8.5f}  {direct.argmax:8.5f}  {c.m_mu:.6f}  {c.m_prime_mu:.6f}")

zs = np.linspace(0.0, 12.0, 601)
series = [(f"mu={mu:g}", zs, [phi_mu(mu, z) for z in zs]) for mu in mus]
(out / "figure2.svg").write_text(render(series, xlabel="z", ylabel="phi_mu(z)"))

# m_mu sits below m'_mu, and both decay as the dimension grows
grid = np.round(np.arange(1, 101) / 10, 1)
chars = [bessel_characteristics(mu) for mu in grid]
series = [
    ("m_mu", grid, [c.m_mu for c in chars]),
    ("m'_mu", grid, [c.m_prime_mu for c in chars]),
]
(out / "figure3.svg").write_text(render(series, xlabel="mu", ylabel="value"))
print(f"wrote {out / 'figure2.svg'} and {out / 'figure3.svg'}")
