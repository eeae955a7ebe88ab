"""hamlab: a desk-scale laboratory for Hammersley's interacting particle process.

The package builds the process exactly from a planar Poisson field through
the increasing-sequence variational coupling, solves the macroscopic
Hamilton-Jacobi / Burgers equations in closed form for piecewise-constant
density data, and statistically verifies the hydrodynamic and diffusive
fluctuation limits.
"""

from hamlab.poisson_field import Region, PointField, sample_field, points_in
from hamlab.increasing_seq import lis_count, l_between, gamma, gamma_profile
from hamlab.macro_solver import FluxPair, InitialProfile, MacroSolution
from hamlab.hammersley import WindowSpec, ParticleState

__all__ = [
    "Region",
    "PointField",
    "sample_field",
    "points_in",
    "lis_count",
    "l_between",
    "gamma",
    "gamma_profile",
    "FluxPair",
    "InitialProfile",
    "MacroSolution",
    "WindowSpec",
    "ParticleState",
]

__version__ = "0.1.0"
