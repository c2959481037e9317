"""Desk-scale default parameter sets for the four models.

Each preset passes :func:`mesobd.models.validate_conditions` at the Ruelle
exponents returned alongside it, so simulations stay sub-critical and the
kinetic fixed points are attracting.  The default arena is a 1-d torus of
side 10 with kernel radii at most 1.
"""

from __future__ import annotations

from .geometry import Kernel, TorusDomain
from .models import (
    BdlpInGlauber,
    BdlpPair,
    DensityBranching,
    GlauberPair,
)

__all__ = [
    "default_domain",
    "bdlp_pair_default",
    "widom_rowlinson_default",
    "bdlp_in_glauber_default",
    "density_branching_default",
    "default_models",
]


def default_domain() -> TorusDomain:
    return TorusDomain(dim=1, side=10.0)


def bdlp_pair_default() -> tuple:
    """Coupled logistic pair; feasible at (alpha, beta) = (-0.5, -0.8)."""
    model = BdlpPair(
        mortality_plus=1.5,
        mortality_minus=1.5,
        compete_minus=Kernel.tophat(1.0, 0.5),
        branch_minus=Kernel.tophat(0.3, 0.5),
        compete_plus=Kernel.tophat(1.0, 0.5),
        branch_plus=Kernel.tophat(0.3, 0.5),
        cross_death=Kernel.tophat(0.5, 0.5),
        cross_birth=Kernel.tophat(0.1, 0.5),
        immigration=0.2,
    )
    return model, (-0.5, -0.8)


def widom_rowlinson_default() -> tuple:
    """Symmetric cross-repulsive pair; feasible at (alpha, beta) = (0, 0)."""
    model = GlauberPair.widom_rowlinson(
        activity_plus=0.3,
        activity_minus=0.3,
        repulsion_from_plus=Kernel.tophat(1.0, 0.5),
        repulsion_from_minus=Kernel.tophat(1.0, 0.5),
    )
    return model, (0.0, 0.0)


def bdlp_in_glauber_default() -> tuple:
    """Logistic plus species in an activity-driven minus field; (0, 0)."""
    model = BdlpInGlauber(
        mortality_plus=2.2,
        compete_plus=Kernel.tophat(1.0, 0.5),
        branch_plus=Kernel.tophat(0.3, 0.5),
        cross_death=Kernel.tophat(0.5, 0.5),
        cross_birth=Kernel.tophat(0.1, 0.5),
        birth_repulsion_minus=Kernel.tophat(1.0, 0.5),
        activity_minus=0.3,
    )
    return model, (0.0, 0.0)


def density_branching_default() -> tuple:
    """Crowding-limited branching in a minus environment; (-1, -1)."""
    model = DensityBranching(
        mortality_plus=4.0,
        crowding_plus=Kernel.tophat(0.5, 0.5),
        self_repulsion_minus=Kernel.tophat(1.0, 0.5),
        parent_suppression=Kernel.tophat(0.5, 0.5),
        branch_plus=Kernel.tophat(0.4, 0.5),
        activity_minus=0.2,
    )
    return model, (-1.0, -1.0)


def default_models() -> dict:
    """All four presets: variant name -> (model, feasible (alpha, beta))."""
    return {
        "bdlp_pair": bdlp_pair_default(),
        "glauber_pair": widom_rowlinson_default(),
        "bdlp_in_glauber": bdlp_in_glauber_default(),
        "density_branching": density_branching_default(),
    }
