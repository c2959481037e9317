"""Two-species continuum birth-and-death dynamics and their kinetic limits.

The package provides:

* :mod:`mesobd.geometry` -- periodic domains, radial kernels and the kernel
  functionals (mass, Mayer integral, pair energy);
* :mod:`mesobd.combinatorics` -- exact subset-sum transforms on finite
  two-species configurations;
* :mod:`mesobd.models` -- the four rate models, their scaling transform,
  thinning birth sampler and parameter validators;
* :mod:`mesobd.simulate` -- exact event-driven simulation with cell lists,
  Poisson initialization and empirical density/pair-correlation estimators;
* :mod:`mesobd.kinetic` -- periodic-grid integration of each model's kinetic
  system plus the homogeneous reductions and fixed points;
* :mod:`mesobd.harness` -- experiment configs, run modes and the scaling
  sweep comparing rescaled empirical densities against kinetic solutions.
"""

from .combinatorics import (
    enumerate_subconfigurations,
    k_inverse,
    k_transform,
    lp_exponential,
)
from .geometry import (
    Kernel,
    TorusDomain,
    TwoSpeciesConfiguration,
    kernel_eval,
    kernel_mass,
    mayer_integral,
    relative_energy,
    torus_distance,
)
from .harness import (
    ConfigError,
    ConvergenceTable,
    ExperimentConfig,
    config_to_dict,
    load_config,
    parse_config,
    replica_rng,
    run_scaling_sweep,
    run_single,
)
from .kinetic import (
    HomogeneousState,
    KineticState,
    UnsupportedModelError,
    convolve_periodic,
    grid_kernel_mass,
    homogeneous_fixed_point,
    homogeneous_rhs,
    integrate,
    integrate_homogeneous,
    kinetic_rhs,
)
from .models import (
    BdlpInGlauber,
    BdlpPair,
    ConditionReport,
    ConditionRow,
    DensityBranching,
    GlauberPair,
    ScaledModel,
    apply_vlasov_scaling,
    birth_intensity,
    birth_total_bound,
    death_intensity,
    effective_model,
    feasible_region_scan,
    sample_birth,
    validate_conditions,
)
from .simulate import (
    DensityField,
    ExplosionError,
    SimulationState,
    Trajectory,
    estimate_density_field,
    estimate_pair_correlation,
    init_poisson,
    init_poisson_piecewise,
    simulate,
    total_event_rate,
)

__version__ = "0.1.0"
