"""Non-stopping-timeness of last passage times.

``m(t) = E[Z_t (1 - Z_t)]``, with ``Z`` the Azema supermartingale of a
last passage time, measures how far that time is from being a stopping
time.  This package evaluates it in closed form for three families of
last passage times, maximizes it over ``t`` and checks it by simulation.
"""

from .models import (
    BesselCharacteristics,
    BrownianState,
    ModelSpec,
    NstCurve,
    SupResult,
    Variant,
    bessel_characteristics,
    kstar_experiment,
    m_bessel,
    m_brownian_hit,
    m_exp,
    m_of,
    phi_brownian,
    phi_mu,
    sample_curve,
    solve_z_mu,
    sup_m,
    z_of_state,
)
from .montecarlo import McEstimate, SimConfig

__version__ = "0.1.0"
