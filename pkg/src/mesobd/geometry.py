"""Periodic arena, interaction kernels and the kernel calculus they support.

Positions are plain ``numpy`` arrays of length ``dim`` with every coordinate
in ``[0, L)``; a two-species point pattern is a pair of ``(n, dim)`` arrays.
Kernels are radial, non-negative and compactly supported, which keeps the
wrapped (minimum-image) evaluation single-valued as long as the support
radius does not exceed half the box.

Two scalar functionals of a kernel drive every parameter inequality in the
model validators: its mass ``∫ φ`` and the Mayer-type integral
``∫ |e^(−φ) − 1|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "TorusDomain",
    "Kernel",
    "TwoSpeciesConfiguration",
    "torus_distance",
    "kernel_eval",
    "kernel_mass",
    "mayer_integral",
    "relative_energy",
]

# surface area of the unit sphere and volume of the unit ball, per dimension
_SPHERE_AREA = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}
_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}

QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class TorusDomain:
    """Axis-aligned periodic box with the same side length on every axis."""

    dim: int
    side: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not (self.side > 0.0 and math.isfinite(self.side)):
            raise ValueError(f"side length must be positive, got {self.side}")

    @property
    def volume(self) -> float:
        return self.side**self.dim

    def wrap(self, coords) -> np.ndarray:
        """Reduce coordinates into [0, side) per axis."""
        x = np.asarray(coords, dtype=float)
        return np.mod(x, self.side)

    def uniform_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, self.side, size=self.dim)


def torus_distance(p, q, dom: TorusDomain) -> float:
    """Minimum-image Euclidean distance between two points on the torus."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != (dom.dim,) or q.shape != (dom.dim,):
        raise ValueError(
            f"points must have shape ({dom.dim},), got {p.shape} and {q.shape}"
        )
    delta = np.abs(p - q)
    delta = np.minimum(delta, dom.side - delta)
    return float(np.sqrt(np.sum(delta * delta)))


def torus_distances(x, pts, dom: TorusDomain) -> np.ndarray:
    """Minimum-image distances from one point to each row of ``pts``."""
    x = np.asarray(x, dtype=float)
    pts = np.asarray(pts, dtype=float).reshape(-1, dom.dim)
    delta = np.abs(pts - x)
    delta = np.minimum(delta, dom.side - delta)
    return np.sqrt(np.sum(delta * delta, axis=1))


@dataclass(frozen=True)
class Kernel:
    """Radial, non-negative, compactly supported interaction kernel.

    Shapes:

    * ``tophat``     -- amplitude on a ball: ``A · 1{d <= radius}``
    * ``truncated_gaussian`` -- ``A · exp(−d²/(2 width²)) · 1{d <= cutoff}``
    * ``zero``       -- identically zero

    ``cutoff`` is the support radius for either non-zero shape; callers must
    keep it at most half the box side of any domain the kernel is used on.
    """

    shape: str
    amplitude: float = 0.0
    cutoff: float = 0.0
    width: float = 0.0

    def __post_init__(self):
        if self.shape not in ("tophat", "truncated_gaussian", "zero"):
            raise ValueError(f"unknown kernel shape {self.shape!r}")
        if self.amplitude < 0.0:
            raise ValueError("kernel amplitude must be non-negative")
        if self.shape != "zero":
            if not self.cutoff > 0.0:
                raise ValueError("kernel cutoff must be positive")
            if self.shape == "truncated_gaussian" and not self.width > 0.0:
                raise ValueError("gaussian width must be positive")

    @staticmethod
    def tophat(amplitude: float, radius: float) -> "Kernel":
        return Kernel("tophat", amplitude=amplitude, cutoff=radius)

    @staticmethod
    def truncated_gaussian(amplitude: float, width: float, cutoff: float) -> "Kernel":
        return Kernel(
            "truncated_gaussian", amplitude=amplitude, cutoff=cutoff, width=width
        )

    @staticmethod
    def zero() -> "Kernel":
        return Kernel("zero")

    @property
    def is_zero(self) -> bool:
        return self.shape == "zero" or self.amplitude == 0.0

    def scaled(self, factor: float) -> "Kernel":
        """Same profile with the amplitude multiplied by ``factor`` >= 0."""
        if factor < 0.0:
            raise ValueError("scaling factor must be non-negative")
        if self.is_zero or factor == 0.0:
            return Kernel.zero()
        return Kernel(self.shape, self.amplitude * factor, self.cutoff, self.width)

    def profile(self, distance):
        """Radial profile; accepts scalars or arrays of distances."""
        d = np.asarray(distance, dtype=float)
        if self.shape == "zero":
            out = np.zeros_like(d)
        elif self.shape == "tophat":
            out = np.where(d <= self.cutoff, self.amplitude, 0.0)
        else:
            out = np.where(
                d <= self.cutoff,
                self.amplitude * np.exp(-(d * d) / (2.0 * self.width**2)),
                0.0,
            )
        return out


def kernel_eval(k: Kernel, distance) -> float | np.ndarray:
    """Pointwise kernel value at the given radial distance(s)."""
    if np.any(np.asarray(distance) < 0.0):
        raise ValueError("distance must be non-negative")
    out = k.profile(distance)
    return float(out) if out.ndim == 0 else out


def _radial_quadrature(f, cutoff: float, dim: int) -> float:
    """Integrate f(r) over the ball of radius ``cutoff`` in ``dim`` dimensions."""
    area = _SPHERE_AREA[dim]
    val, _ = integrate.quad(
        lambda r: f(r) * r ** (dim - 1),
        0.0,
        cutoff,
        epsabs=QUAD_ABS_TOL,
        epsrel=1e-12,
        limit=200,
    )
    return area * val


def kernel_mass(k: Kernel, dim: int) -> float:
    """Total mass ``∫ φ`` of the kernel over d-dimensional space.

    Closed form for the tophat; adaptive quadrature (absolute tolerance
    1e-10) for the truncated gaussian.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if k.is_zero:
        return 0.0
    if k.shape == "tophat":
        return k.amplitude * _BALL_VOLUME[dim] * k.cutoff**dim
    return _radial_quadrature(
        lambda r: k.amplitude * math.exp(-r * r / (2.0 * k.width**2)), k.cutoff, dim
    )


def mayer_integral(k: Kernel, dim: int, negate: bool = False) -> float:
    """Mayer-type functional ``∫ |e^(−φ) − 1|`` of a non-negative kernel.

    For non-negative kernels this equals ``∫ (1 − e^(−φ))``.  With
    ``negate=True`` the sign of the exponent flips and the value is
    ``∫ (e^(+φ) − 1)``, the functional needed by the density-branching
    parameter inequalities.
    """
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    if k.is_zero:
        return 0.0
    if k.shape == "tophat":
        a = k.amplitude
        factor = (math.exp(a) - 1.0) if negate else (1.0 - math.exp(-a))
        return factor * _BALL_VOLUME[dim] * k.cutoff**dim

    def integrand(r):
        phi = k.amplitude * math.exp(-r * r / (2.0 * k.width**2))
        return (math.exp(phi) - 1.0) if negate else (1.0 - math.exp(-phi))

    return _radial_quadrature(integrand, k.cutoff, dim)


def relative_energy(x, pts, k: Kernel, dom: TorusDomain) -> float:
    """Pair-potential field felt at ``x`` from the points in ``pts``.

    Sums ``φ(x − y)`` over exactly the rows given; the caller removes ``x``
    itself when the self-term must be excluded.
    """
    pts = np.asarray(pts, dtype=float).reshape(-1, dom.dim)
    if pts.shape[0] == 0 or k.is_zero:
        return 0.0
    d = torus_distances(x, pts, dom)
    return float(np.sum(k.profile(d)))


def _as_points(pts, name: str) -> np.ndarray:
    arr = np.asarray(pts, dtype=float)
    if arr.size == 0:
        return arr.reshape(0, arr.shape[1] if arr.ndim == 2 else 1)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be an (n, dim) array")
    return arr


@dataclass
class TwoSpeciesConfiguration:
    """Finite two-species point pattern with disjoint, duplicate-free supports.

    ``plus`` and ``minus`` are ``(n, dim)`` float arrays.  No two stored
    points, within or across species, may coincide exactly.
    """

    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        self.plus = _as_points(self.plus, "plus")
        self.minus = _as_points(self.minus, "minus")
        if self.plus.shape[0] and self.minus.shape[0]:
            if self.plus.shape[1] != self.minus.shape[1]:
                raise ValueError("plus and minus points have different dimensions")
        allpts = self.all_points()
        if allpts.shape[0] > 1:
            uniq = np.unique(allpts, axis=0)
            if uniq.shape[0] != allpts.shape[0]:
                raise ValueError("configuration contains exactly coinciding points")

    @staticmethod
    def empty(dim: int) -> "TwoSpeciesConfiguration":
        z = np.zeros((0, dim))
        return TwoSpeciesConfiguration(z.copy(), z.copy())

    @property
    def dim(self) -> int:
        if self.plus.shape[0]:
            return self.plus.shape[1]
        return self.minus.shape[1] if self.minus.ndim == 2 else 1

    @property
    def n_plus(self) -> int:
        return self.plus.shape[0]

    @property
    def n_minus(self) -> int:
        return self.minus.shape[0]

    def size(self) -> int:
        return self.n_plus + self.n_minus

    def species(self, name: str) -> np.ndarray:
        if name == "plus":
            return self.plus
        if name == "minus":
            return self.minus
        raise ValueError(f"species must be 'plus' or 'minus', got {name!r}")

    def all_points(self) -> np.ndarray:
        if self.n_plus == 0:
            return self.minus
        if self.n_minus == 0:
            return self.plus
        return np.vstack([self.plus, self.minus])

    def copy(self) -> "TwoSpeciesConfiguration":
        return TwoSpeciesConfiguration(self.plus.copy(), self.minus.copy())
