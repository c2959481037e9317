"""The four two-species rate models, their scaling transform and validators.

Each model defines, per species, a death intensity evaluated at a particle
(given the rest of the configuration) and a birth intensity evaluated at a
candidate location.  All interactions go through radial kernels and the
pair-energy field of :mod:`mesobd.geometry`.

Kernel fields are named by role rather than by symbol:

* ``compete_*``  -- same-species competition, adds to the death rate;
* ``branch_*``   -- same-species branching, parents spawn offspring displaced
  by this kernel;
* ``cross_death`` / ``cross_birth`` -- minus-species pressure on the plus
  species' death/birth rates;
* ``repulsion_* / self_repulsion_*`` -- potentials entering Boltzmann factors
  ``exp(−E)`` that damp activity-driven births (and, for ``cross_split > 0``,
  attenuate deaths);
* ``crowding_plus`` -- same-species potential that *amplifies* the death rate
  through ``exp(+E)``;
* ``parent_suppression`` -- potential by which minus particles reduce a plus
  parent's fecundity.

``ScaledModel`` wraps a base model with a scaling level ``n``: pair
potentials inside death rates and inside every exponential factor are
weakened to ``amplitude/n``, activities and immigration are inflated to
``n·z`` (the generator's birth prefactor folded in), and parent-branching
kernels are left unchanged.  Level ``n = 1`` reproduces the base model
exactly; as ``n`` grows the rescaled empirical density approaches the
solution of the model's kinetic equations (see :mod:`mesobd.kinetic`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Union

import numpy as np

from .geometry import (
    Kernel,
    TorusDomain,
    TwoSpeciesConfiguration,
    kernel_mass,
    mayer_integral,
    relative_energy,
    torus_distances,
)

__all__ = [
    "BdlpPair",
    "GlauberPair",
    "BdlpInGlauber",
    "DensityBranching",
    "ScaledModel",
    "ModelSpec",
    "ConditionRow",
    "ConditionReport",
    "death_intensity",
    "birth_intensity",
    "birth_total_bound",
    "sample_birth",
    "apply_vlasov_scaling",
    "effective_model",
    "validate_conditions",
    "feasible_region_scan",
    "pointwise_domination_ratio",
]

SPECIES = ("plus", "minus")


def _check_kernel(k: Kernel, name: str):
    if not isinstance(k, Kernel):
        raise TypeError(f"{name} must be a Kernel")


@dataclass(frozen=True)
class BdlpPair:
    """Two coupled logistic branching/competition populations.

    Minus particles die at ``mortality_minus`` plus same-species competition
    (``compete_minus``), branch via ``branch_minus`` and immigrate at
    constant rate ``immigration``.  Plus particles die at ``mortality_plus``
    plus same-species competition (``compete_plus``) plus cross pressure
    from the minus field (``cross_death``); they branch via ``branch_plus``
    and are additionally seeded by minus particles through ``cross_birth``.
    """

    mortality_plus: float
    mortality_minus: float
    compete_minus: Kernel
    branch_minus: Kernel
    compete_plus: Kernel
    branch_plus: Kernel
    cross_death: Kernel
    cross_birth: Kernel
    immigration: float

    def __post_init__(self):
        if self.mortality_plus < 0 or self.mortality_minus < 0:
            raise ValueError("mortalities must be non-negative")
        if self.immigration < 0:
            raise ValueError("immigration must be non-negative")
        for name in (
            "compete_minus",
            "branch_minus",
            "compete_plus",
            "branch_plus",
            "cross_death",
            "cross_birth",
        ):
            _check_kernel(getattr(self, name), name)


@dataclass(frozen=True)
class GlauberPair:
    """Two activity-driven species with Boltzmann-damped births.

    Births of each species arrive at rate ``activity`` damped by
    ``exp(−(1−cross_split)·E_cross)·exp(−E_self)``; deaths run at rate
    ``exp(−cross_split·E_cross)``.  ``cross_split`` in ``[0, 1/2]`` moves
    part of the cross repulsion from birth suppression into death
    attenuation; 0 gives unit death rates.  With both self potentials zero
    this is the purely cross-repulsive two-species gas.
    """

    cross_split: float
    activity_plus: float
    activity_minus: float
    repulsion_from_plus: Kernel
    repulsion_from_minus: Kernel
    self_repulsion_plus: Kernel
    self_repulsion_minus: Kernel

    def __post_init__(self):
        if not 0.0 <= self.cross_split <= 0.5:
            raise ValueError("cross_split must lie in [0, 1/2]")
        # zero activity is the degenerate no-birth case (pure unit-rate death)
        if self.activity_plus < 0 or self.activity_minus < 0:
            raise ValueError("activities must be non-negative")
        for name in (
            "repulsion_from_plus",
            "repulsion_from_minus",
            "self_repulsion_plus",
            "self_repulsion_minus",
        ):
            _check_kernel(getattr(self, name), name)

    @staticmethod
    def widom_rowlinson(
        activity_plus: float,
        activity_minus: float,
        repulsion_from_plus: Kernel,
        repulsion_from_minus: Kernel,
    ) -> "GlauberPair":
        """Purely cross-repulsive special case (no self potentials)."""
        return GlauberPair(
            cross_split=0.0,
            activity_plus=activity_plus,
            activity_minus=activity_minus,
            repulsion_from_plus=repulsion_from_plus,
            repulsion_from_minus=repulsion_from_minus,
            self_repulsion_plus=Kernel.zero(),
            self_repulsion_minus=Kernel.zero(),
        )


@dataclass(frozen=True)
class BdlpInGlauber:
    """Logistic plus population living in an activity-driven minus field.

    Minus particles die at unit rate and are born at ``activity_minus``
    damped by their own repulsion ``birth_repulsion_minus``.  Plus particles
    follow branching/competition dynamics (``branch_plus``/``compete_plus``)
    with extra death pressure ``cross_death`` and extra offspring
    ``cross_birth`` sourced by the minus field.
    """

    mortality_plus: float
    compete_plus: Kernel
    branch_plus: Kernel
    cross_death: Kernel
    cross_birth: Kernel
    birth_repulsion_minus: Kernel
    activity_minus: float

    def __post_init__(self):
        if self.mortality_plus <= 0:
            raise ValueError("mortality_plus must be positive")
        if self.activity_minus <= 0:
            raise ValueError("activity_minus must be positive")
        for name in (
            "compete_plus",
            "branch_plus",
            "cross_death",
            "cross_birth",
            "birth_repulsion_minus",
        ):
            _check_kernel(getattr(self, name), name)


@dataclass(frozen=True)
class DensityBranching:
    """Plus branching with crowding-amplified deaths in a minus environment.

    Plus deaths run at ``mortality_plus · exp(+E_crowding)``; each plus
    parent spawns offspring displaced by ``branch_plus`` at a fecundity
    reduced by ``exp(−E_parent_suppression)`` evaluated at the *parent*.
    Minus particles die at unit rate and are born at ``activity_minus``
    damped by their self repulsion.
    """

    mortality_plus: float
    crowding_plus: Kernel
    self_repulsion_minus: Kernel
    parent_suppression: Kernel
    branch_plus: Kernel
    activity_minus: float

    def __post_init__(self):
        if self.mortality_plus <= 0:
            raise ValueError("mortality_plus must be positive")
        if self.activity_minus <= 0:
            raise ValueError("activity_minus must be positive")
        for name in (
            "crowding_plus",
            "self_repulsion_minus",
            "parent_suppression",
            "branch_plus",
        ):
            _check_kernel(getattr(self, name), name)


ModelSpec = Union[BdlpPair, GlauberPair, BdlpInGlauber, DensityBranching]


@dataclass(frozen=True)
class ScaledModel:
    """A base model at scaling level ``n`` (``n = 1`` is the base itself)."""

    base: ModelSpec
    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"scaling level must be an integer >= 1, got {self.n}")


def apply_vlasov_scaling(base: ModelSpec, n: int) -> ScaledModel:
    """Wrap ``base`` at scaling level ``n``; rates follow the recipe in the
    module docstring."""
    if isinstance(base, ScaledModel):
        raise TypeError("base must be an unscaled model")
    return ScaledModel(base=base, n=int(n))


def effective_model(m: "ModelSpec | ScaledModel") -> ModelSpec:
    """The plain model whose rates equal the effective rates of ``m``.

    For a ScaledModel the generator's birth prefactor ``n`` is folded in, so
    the returned model's birth intensity is the *effective* one.
    """
    if not isinstance(m, ScaledModel):
        return m
    base, n = m.base, m.n
    if n == 1:
        return base
    inv = 1.0 / n
    if isinstance(base, BdlpPair):
        return replace(
            base,
            compete_minus=base.compete_minus.scaled(inv),
            compete_plus=base.compete_plus.scaled(inv),
            cross_death=base.cross_death.scaled(inv),
            immigration=base.immigration * n,
        )
    if isinstance(base, GlauberPair):
        return replace(
            base,
            activity_plus=base.activity_plus * n,
            activity_minus=base.activity_minus * n,
            repulsion_from_plus=base.repulsion_from_plus.scaled(inv),
            repulsion_from_minus=base.repulsion_from_minus.scaled(inv),
            self_repulsion_plus=base.self_repulsion_plus.scaled(inv),
            self_repulsion_minus=base.self_repulsion_minus.scaled(inv),
        )
    if isinstance(base, BdlpInGlauber):
        return replace(
            base,
            compete_plus=base.compete_plus.scaled(inv),
            cross_death=base.cross_death.scaled(inv),
            birth_repulsion_minus=base.birth_repulsion_minus.scaled(inv),
            activity_minus=base.activity_minus * n,
        )
    if isinstance(base, DensityBranching):
        return replace(
            base,
            crowding_plus=base.crowding_plus.scaled(inv),
            self_repulsion_minus=base.self_repulsion_minus.scaled(inv),
            parent_suppression=base.parent_suppression.scaled(inv),
            activity_minus=base.activity_minus * n,
        )
    raise TypeError(f"unknown model type {type(base).__name__}")


def variant_name(m: "ModelSpec | ScaledModel") -> str:
    if isinstance(m, ScaledModel):
        return variant_name(m.base)
    return {
        BdlpPair: "bdlp_pair",
        GlauberPair: "glauber_pair",
        BdlpInGlauber: "bdlp_in_glauber",
        DensityBranching: "density_branching",
    }[type(m)]


# ---------------------------------------------------------------------------
# normal form: every model's rates as energy channels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyChannel:
    """One pair-energy term: kernel summed over the ``source`` species.

    ``coefficient`` is the signed factor multiplying the energy inside an
    exponential (additive death channels ignore it).
    """

    source: str
    kernel: Kernel
    coefficient: float = 1.0


@dataclass(frozen=True)
class DeathRule:
    """death rate = (base + sum of additive energies) · exp(coef · E_exp)"""

    base: float
    additive: tuple[EnergyChannel, ...] = ()
    exponential: Optional[EnergyChannel] = None


@dataclass(frozen=True)
class ParentChannel:
    """Offspring displaced from each ``source`` parent by ``kernel``;
    ``weight`` (if any) damps a parent's fecundity by exp(coef · E(parent))."""

    source: str
    kernel: Kernel
    weight: Optional[EnergyChannel] = None


@dataclass(frozen=True)
class BirthRule:
    """birth rate = activity · prod exp(coef·E(x)) + parent-kernel terms"""

    activity: float = 0.0
    suppression: tuple[EnergyChannel, ...] = ()
    parents: tuple[ParentChannel, ...] = ()


@dataclass(frozen=True)
class RateTable:
    death: dict  # species -> DeathRule
    birth: dict  # species -> BirthRule

    def __hash__(self):  # dicts are fixed after construction
        return hash(
            (
                self.death["plus"],
                self.death["minus"],
                self.birth["plus"],
                self.birth["minus"],
            )
        )


def _channels(*items) -> tuple[EnergyChannel, ...]:
    return tuple(ch for ch in items if not ch.kernel.is_zero)


@lru_cache(maxsize=256)
def rate_table(m: "ModelSpec | ScaledModel") -> RateTable:
    """Effective rates of ``m`` in channel normal form (zero kernels pruned)."""
    em = effective_model(m)
    if isinstance(em, BdlpPair):
        death = {
            "minus": DeathRule(
                em.mortality_minus,
                _channels(EnergyChannel("minus", em.compete_minus)),
            ),
            "plus": DeathRule(
                em.mortality_plus,
                _channels(
                    EnergyChannel("plus", em.compete_plus),
                    EnergyChannel("minus", em.cross_death),
                ),
            ),
        }
        birth = {
            "minus": BirthRule(
                activity=em.immigration,
                parents=(ParentChannel("minus", em.branch_minus),)
                if not em.branch_minus.is_zero
                else (),
            ),
            "plus": BirthRule(
                parents=tuple(
                    ParentChannel(src, k)
                    for src, k in (
                        ("plus", em.branch_plus),
                        ("minus", em.cross_birth),
                    )
                    if not k.is_zero
                )
            ),
        }
    elif isinstance(em, GlauberPair):
        s = em.cross_split

        def glauber_death(cross_src, cross_kernel):
            if s == 0.0 or cross_kernel.is_zero:
                return DeathRule(1.0)
            return DeathRule(1.0, (), EnergyChannel(cross_src, cross_kernel, -s))

        death = {
            "minus": glauber_death("plus", em.repulsion_from_plus),
            "plus": glauber_death("minus", em.repulsion_from_minus),
        }
        birth = {
            "minus": BirthRule(
                activity=em.activity_minus,
                suppression=_channels(
                    EnergyChannel("plus", em.repulsion_from_plus, -(1.0 - s)),
                    EnergyChannel("minus", em.self_repulsion_minus, -1.0),
                ),
            ),
            "plus": BirthRule(
                activity=em.activity_plus,
                suppression=_channels(
                    EnergyChannel("minus", em.repulsion_from_minus, -(1.0 - s)),
                    EnergyChannel("plus", em.self_repulsion_plus, -1.0),
                ),
            ),
        }
    elif isinstance(em, BdlpInGlauber):
        death = {
            "minus": DeathRule(1.0),
            "plus": DeathRule(
                em.mortality_plus,
                _channels(
                    EnergyChannel("plus", em.compete_plus),
                    EnergyChannel("minus", em.cross_death),
                ),
            ),
        }
        birth = {
            "minus": BirthRule(
                activity=em.activity_minus,
                suppression=_channels(
                    EnergyChannel("minus", em.birth_repulsion_minus, -1.0)
                ),
            ),
            "plus": BirthRule(
                parents=tuple(
                    ParentChannel(src, k)
                    for src, k in (
                        ("plus", em.branch_plus),
                        ("minus", em.cross_birth),
                    )
                    if not k.is_zero
                )
            ),
        }
    elif isinstance(em, DensityBranching):
        death = {
            "minus": DeathRule(1.0),
            "plus": DeathRule(
                em.mortality_plus,
                (),
                EnergyChannel("plus", em.crowding_plus, 1.0)
                if not em.crowding_plus.is_zero
                else None,
            ),
        }
        weight = (
            EnergyChannel("minus", em.parent_suppression, -1.0)
            if not em.parent_suppression.is_zero
            else None
        )
        birth = {
            "minus": BirthRule(
                activity=em.activity_minus,
                suppression=_channels(
                    EnergyChannel("minus", em.self_repulsion_minus, -1.0)
                ),
            ),
            "plus": BirthRule(
                parents=(ParentChannel("plus", em.branch_plus, weight),)
                if not em.branch_plus.is_zero
                else ()
            ),
        }
    else:
        raise TypeError(f"unknown model type {type(em).__name__}")
    return RateTable(death=death, birth=birth)


# ---------------------------------------------------------------------------
# intensity evaluation
# ---------------------------------------------------------------------------


def _check_species(species: str):
    if species not in SPECIES:
        raise ValueError(f"species must be 'plus' or 'minus', got {species!r}")


def death_intensity(
    m: "ModelSpec | ScaledModel",
    species: str,
    x,
    cfg: TwoSpeciesConfiguration,
    dom: TorusDomain,
) -> float:
    """Death rate of a ``species`` particle at ``x``; ``cfg`` must already
    exclude the particle itself."""
    _check_species(species)
    x = np.asarray(x, dtype=float)
    own = cfg.species(species)
    if own.shape[0] and np.any(np.all(own == x, axis=1)):
        raise ValueError("death_intensity: cfg must exclude the dying particle")
    rule = rate_table(m).death[species]
    rate = rule.base
    for ch in rule.additive:
        rate += relative_energy(x, cfg.species(ch.source), ch.kernel, dom)
    if rule.exponential is not None:
        ch = rule.exponential
        e = relative_energy(x, cfg.species(ch.source), ch.kernel, dom)
        rate *= math.exp(ch.coefficient * e)
    return rate


def _parent_weights(
    pc: ParentChannel, cfg: TwoSpeciesConfiguration, dom: TorusDomain
) -> np.ndarray:
    parents = cfg.species(pc.source)
    if pc.weight is None:
        return np.ones(parents.shape[0])
    wch = pc.weight
    env = cfg.species(wch.source)
    return np.array(
        [
            math.exp(wch.coefficient * relative_energy(y, env, wch.kernel, dom))
            for y in parents
        ]
    )


def birth_intensity(
    m: "ModelSpec | ScaledModel",
    species: str,
    x,
    cfg: TwoSpeciesConfiguration,
    dom: TorusDomain,
) -> float:
    """Effective birth rate density for a new ``species`` particle at ``x``
    (for scaled models the scaling prefactor is already folded in)."""
    _check_species(species)
    x = np.asarray(x, dtype=float)
    rule = rate_table(m).birth[species]
    val = 0.0
    if rule.activity > 0.0:
        part = rule.activity
        for ch in rule.suppression:
            e = relative_energy(x, cfg.species(ch.source), ch.kernel, dom)
            part *= math.exp(ch.coefficient * e)
        val += part
    for pc in rule.parents:
        parents = cfg.species(pc.source)
        if parents.shape[0] == 0:
            continue
        kvals = pc.kernel.profile(torus_distances(x, parents, dom))
        val += float(np.dot(_parent_weights(pc, cfg, dom), kvals))
    return val


def birth_total_bound(
    m: "ModelSpec | ScaledModel",
    species: str,
    cfg: TwoSpeciesConfiguration,
    dom: TorusDomain,
) -> float:
    """Certified upper bound on the spatial integral of the birth intensity.

    Activity parts contribute ``activity · volume`` (Boltzmann factors are
    at most 1); parent parts contribute the exact total
    ``sum of parent weights · kernel mass``.
    """
    _check_species(species)
    rule = rate_table(m).birth[species]
    total = rule.activity * dom.volume
    for pc in rule.parents:
        w = _parent_weights(pc, cfg, dom)
        if w.size:
            total += float(np.sum(w)) * kernel_mass(pc.kernel, dom.dim)
    return total


def _sample_kernel_offset(k: Kernel, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a displacement from the normalized kernel profile."""
    if k.is_zero:
        raise ValueError("cannot sample from the zero kernel")

    def random_direction():
        if dim == 1:
            return np.array([1.0 if rng.random() < 0.5 else -1.0])
        v = rng.normal(size=dim)
        n = np.linalg.norm(v)
        while n == 0.0:
            v = rng.normal(size=dim)
            n = np.linalg.norm(v)
        return v / n

    if k.shape == "tophat":
        r = k.cutoff * rng.random() ** (1.0 / dim)
        return r * random_direction()
    # truncated gaussian: choose the proposal by how much mass the cutoff keeps
    if k.cutoff <= 2.0 * k.width:
        # uniform-in-ball proposal, accept with the gaussian profile
        while True:
            r = k.cutoff * rng.random() ** (1.0 / dim)
            if rng.random() < math.exp(-r * r / (2.0 * k.width**2)):
                return r * random_direction()
    while True:
        g = rng.normal(scale=k.width, size=dim)
        if np.dot(g, g) <= k.cutoff**2:
            return g


def sample_birth(
    m: "ModelSpec | ScaledModel",
    species: str,
    cfg: TwoSpeciesConfiguration,
    dom: TorusDomain,
    rng: np.random.Generator,
) -> Optional[np.ndarray]:
    """One thinning proposal for a ``species`` birth.

    Returns a new location with probability (integrated intensity)/(bound),
    distributed with density proportional to the birth intensity, or None on
    thinning rejection.  Sub-channels are picked proportionally to their
    bound share; activity proposals are uniform and accepted with their
    Boltzmann factor, parent proposals displace an exact kernel draw and
    never reject.
    """
    _check_species(species)
    rule = rate_table(m).birth[species]
    activity_bound = rule.activity * dom.volume
    parent_weights = []
    parent_bounds = []
    for pc in rule.parents:
        w = _parent_weights(pc, cfg, dom)
        parent_weights.append(w)
        mass = kernel_mass(pc.kernel, dom.dim) if w.size else 0.0
        parent_bounds.append(float(np.sum(w)) * mass)
    total = activity_bound + sum(parent_bounds)
    if total <= 0.0:
        raise ValueError("sample_birth requires a positive birth bound")
    u = rng.uniform(0.0, total)
    if u < activity_bound:
        x = dom.uniform_point(rng)
        accept = 1.0
        for ch in rule.suppression:
            e = relative_energy(x, cfg.species(ch.source), ch.kernel, dom)
            accept *= math.exp(ch.coefficient * e)
        if accept >= 1.0 or rng.random() < accept:
            return x
        return None
    u -= activity_bound
    for pc, w, bound in zip(rule.parents, parent_weights, parent_bounds):
        if u >= bound:
            u -= bound
            continue
        mass = kernel_mass(pc.kernel, dom.dim)
        idx = int(np.searchsorted(np.cumsum(w) * mass, u, side="right"))
        idx = min(idx, w.size - 1)
        y = cfg.species(pc.source)[idx]
        return dom.wrap(y + _sample_kernel_offset(pc.kernel, dom.dim, rng))
    # float roundoff can push u past the last channel; retry on the last one
    pc = rule.parents[-1]
    y = cfg.species(pc.source)[-1]
    return dom.wrap(y + _sample_kernel_offset(pc.kernel, dom.dim, rng))


# ---------------------------------------------------------------------------
# parameter validators
# ---------------------------------------------------------------------------


@dataclass
class ConditionRow:
    label: str
    left: float
    right: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "left": self.left,
            "right": self.right,
            "passed": self.passed,
            "note": self.note,
        }


@dataclass
class ConditionReport:
    """Outcome of checking one model's parameter inequalities at (alpha, beta)."""

    model: str
    alpha: float
    beta: float
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "alpha": self.alpha,
            "beta": self.beta,
            "passed": self.passed,
            "rows": [r.to_dict() for r in self.rows],
        }


def pointwise_domination_ratio(
    num: Kernel, den: Kernel, samples: int = 4001
) -> float:
    """Smallest ``theta`` with ``num(r) <= theta · den(r)`` for all r >= 0.

    Evaluated on a dense radial grid over the joint support; returns ``inf``
    when ``num`` is positive somewhere ``den`` vanishes.
    """
    if num.is_zero:
        return 0.0
    if den.is_zero:
        return math.inf
    rmax = max(num.cutoff, den.cutoff)
    r = np.linspace(0.0, rmax, samples)
    nv = num.profile(r)
    dv = den.profile(r)
    if np.any((nv > 0.0) & (dv <= 0.0)):
        return math.inf
    mask = dv > 0.0
    if not np.any(mask):
        return 0.0
    return float(np.max(nv[mask] / dv[mask]))


def _domination_rows(
    label: str, num: Kernel, den: Kernel, theta: Optional[float]
) -> tuple[list[ConditionRow], float]:
    """Pointwise-sufficient check of a quadratic-form domination hypothesis."""
    if theta is None:
        theta = pointwise_domination_ratio(num, den)
        note = "pointwise-sufficient, auto witness"
        worst = 0.0 if math.isfinite(theta) else math.inf
    else:
        note = "pointwise-sufficient"
        rmax = max(num.cutoff, den.cutoff, 1e-12)
        r = np.linspace(0.0, rmax, 4001)
        worst = float(np.max(num.profile(r) - theta * den.profile(r)))
    row = ConditionRow(
        label=f"{label} (kernel domination, theta={theta:.6g})",
        left=worst,
        right=0.0,
        passed=worst <= 0.0 and math.isfinite(theta),
        note=note,
    )
    return [row], theta


def validate_conditions(
    m: "ModelSpec | ScaledModel",
    alpha: float,
    beta: float,
    witnesses: Optional[dict] = None,
    dim: int = 1,
) -> ConditionReport:
    """Evaluate the model's parameter inequalities at Ruelle exponents
    ``(alpha, beta)``.

    ``witnesses`` optionally supplies the domination constants (keys
    ``theta_branch_plus``, ``slack_branch_plus``, ``theta_branch_minus``,
    ``slack_branch_minus``, ``theta_cross``); omitted ones are computed as
    the minimal pointwise kernel ratio with zero slack.  ``dim`` is the
    spatial dimension in which kernel masses are taken.
    """
    if not (math.isfinite(alpha) and math.isfinite(beta)):
        raise ValueError("alpha and beta must be finite")
    em = effective_model(m)
    w = dict(witnesses or {})
    ea, eb = math.exp(alpha), math.exp(beta)
    rows: list[ConditionRow] = []
    report = ConditionReport(model=variant_name(em), alpha=alpha, beta=beta)

    def mass(k: Kernel, d: int) -> float:
        return kernel_mass(k, d)

    if isinstance(em, GlauberPair):
        s = em.cross_split
        for sp, zz, cross, own, e_self, e_other in (
            ("minus", em.activity_minus, em.repulsion_from_plus,
             em.self_repulsion_minus, eb, ea),
            ("plus", em.activity_plus, em.repulsion_from_minus,
             em.self_repulsion_plus, ea, eb),
        ):
            c_split = mayer_integral(cross.scaled(s), dim)
            c_cross = mayer_integral(cross.scaled(1.0 - s), dim)
            c_own = mayer_integral(own, dim)
            lhs = math.exp(e_other * c_split) + (1.0 / e_self) * zz * math.exp(
                e_other * c_cross
            ) * math.exp(e_self * c_own)
            rows.append(
                ConditionRow(
                    label=f"{sp}-birth contraction",
                    left=lhs,
                    right=2.0,
                    passed=lhs < 2.0,
                )
            )
    elif isinstance(em, BdlpPair):
        d = dim
        sub, t1 = _domination_rows(
            "branch_plus vs compete_plus", em.branch_plus, em.compete_plus,
            w.get("theta_branch_plus"),
        )
        rows += sub
        sub, t2 = _domination_rows(
            "branch_minus vs compete_minus", em.branch_minus, em.compete_minus,
            w.get("theta_branch_minus"),
        )
        rows += sub
        sub, t3 = _domination_rows(
            "cross_birth vs cross_death", em.cross_birth, em.cross_death,
            w.get("theta_cross"),
        )
        rows += sub
        b1 = float(w.get("slack_branch_plus", 0.0))
        b2 = float(w.get("slack_branch_minus", 0.0))
        rows.append(ConditionRow("theta_branch_plus < e^alpha", t1, ea, t1 < ea))
        rows.append(ConditionRow("theta_cross < e^alpha", t3, ea, t3 < ea))
        rows.append(ConditionRow("theta_branch_minus < e^beta", t2, eb, t2 < eb))
        rhs_p = (
            ea * mass(em.compete_plus, d)
            + eb * mass(em.cross_death, d)
            + (1.0 / ea) * b1
            + mass(em.branch_plus, d)
            + mass(em.cross_birth, d)
        )
        rows.append(
            ConditionRow(
                "mortality_plus dominates", em.mortality_plus, rhs_p,
                em.mortality_plus > rhs_p,
            )
        )
        rhs_m = (
            eb * mass(em.compete_minus, d)
            + (1.0 / eb) * (b2 + em.immigration)
            + mass(em.branch_minus, d)
        )
        rows.append(
            ConditionRow(
                "mortality_minus dominates", em.mortality_minus, rhs_m,
                em.mortality_minus > rhs_m,
            )
        )
    elif isinstance(em, BdlpInGlauber):
        d = dim
        sub, theta = _domination_rows(
            "branch_plus vs compete_plus", em.branch_plus, em.compete_plus,
            w.get("theta_branch_plus"),
        )
        rows += sub
        sub, vtheta = _domination_rows(
            "cross_birth vs cross_death", em.cross_birth, em.cross_death,
            w.get("theta_cross"),
        )
        rows += sub
        b = float(w.get("slack_branch_plus", 0.0))
        rows.append(ConditionRow("theta_branch_plus < e^alpha", theta, ea, theta < ea))
        rows.append(ConditionRow("theta_cross < e^alpha", vtheta, ea, vtheta < ea))
        act_rhs = em.activity_minus * math.exp(
            eb * mayer_integral(em.birth_repulsion_minus, d)
        )
        rows.append(
            ConditionRow("e^beta dominates minus activity", eb, act_rhs, eb > act_rhs)
        )
        rhs_p = (
            ea * mass(em.compete_plus, d)
            + eb * mass(em.cross_death, d)
            + mass(em.branch_plus, d)
            + mass(em.cross_birth, d)
            + (1.0 / ea) * b
        )
        rows.append(
            ConditionRow(
                "mortality_plus dominates", em.mortality_plus, rhs_p,
                em.mortality_plus > rhs_p,
            )
        )
    elif isinstance(em, DensityBranching):
        d = dim
        rows.append(
            ConditionRow(
                "crowding kernel nonzero", mass(em.crowding_plus, d), 0.0,
                mass(em.crowding_plus, d) > 0.0,
            )
        )
        rows.append(
            ConditionRow(
                "branch kernel nonzero", mass(em.branch_plus, d), 0.0,
                mass(em.branch_plus, d) > 0.0,
            )
        )
        sub, vtheta = _domination_rows(
            "branch_plus vs crowding_plus", em.branch_plus, em.crowding_plus,
            w.get("theta_branch"),
        )
        rows += sub
        b = float(w.get("slack_branch", 0.0))
        act_rhs = em.activity_minus * math.exp(
            eb * mayer_integral(em.self_repulsion_minus, d)
        )
        rows.append(
            ConditionRow("e^beta dominates minus activity", eb, act_rhs, eb > act_rhs)
        )
        lhs = math.exp(ea * mayer_integral(em.crowding_plus, d, negate=True))
        branch_term = max(mass(em.branch_plus, d) + b / ea, vtheta / ea)
        lhs += (branch_term / em.mortality_plus) * math.exp(
            eb * mayer_integral(em.parent_suppression, d)
        )
        rows.append(ConditionRow("plus contraction", lhs, 2.0, lhs < 2.0))
    else:
        raise TypeError(f"unknown model type {type(em).__name__}")
    report.rows = rows
    return report


def feasible_region_scan(
    m: "ModelSpec | ScaledModel",
    alpha_range: tuple[float, float],
    beta_range: tuple[float, float],
    step: float,
    witnesses: Optional[dict] = None,
    dim: int = 1,
) -> Optional[tuple[float, float, ConditionReport]]:
    """First grid point (alpha outer, beta inner, both ascending) where
    :func:`validate_conditions` passes, or None."""
    if step <= 0.0:
        raise ValueError("step must be positive")
    a_lo, a_hi = alpha_range
    b_lo, b_hi = beta_range
    if a_lo > a_hi or b_lo > b_hi:
        raise ValueError("empty scan grid")
    alphas = a_lo + step * np.arange(int(math.floor((a_hi - a_lo) / step)) + 1)
    betas = b_lo + step * np.arange(int(math.floor((b_hi - b_lo) / step)) + 1)
    for a in alphas:
        for b in betas:
            report = validate_conditions(m, float(a), float(b), witnesses, dim=dim)
            if report.passed:
                return float(a), float(b), report
    return None
