"""Exact combinatorial transforms on finite two-species configurations.

Everything here is a finite sum over component-wise subsets, so the
identities hold to machine precision and serve as the trust anchor for the
rest of the package: the product exponential over a configuration, the
subset-sum transform taking functions of finite patterns to functions of
whole configurations, and its alternating-sign inverse.

Functions of configurations are plain callables
``TwoSpeciesConfiguration -> float``; single-species functions are callables
``point -> float``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .geometry import TwoSpeciesConfiguration

__all__ = [
    "enumerate_subconfigurations",
    "lp_exponential",
    "k_transform",
    "k_inverse",
]

SIZE_GUARD = 20  # 2**20 subsets; keeps exhaustive enumeration sub-second

ConfigFunction = Callable[[TwoSpeciesConfiguration], float]
PointFunction = Callable[[np.ndarray], float]


def _check_size(eta: TwoSpeciesConfiguration, op: str):
    if eta.size() > SIZE_GUARD:
        raise ValueError(
            f"{op}: configuration has {eta.size()} points, limit is {SIZE_GUARD}"
        )


def _subsets(points: np.ndarray):
    """All subsets of the rows, ordered by ascending inclusion mask.

    Bit i of the mask selects row i; mask 0 is the empty subset.
    """
    n = points.shape[0]
    rows = [points[[i]] for i in range(n)]
    empty = points[:0]
    out = []
    for mask in range(1 << n):
        if mask == 0:
            out.append(empty)
        else:
            out.append(np.vstack([rows[i] for i in range(n) if mask >> i & 1]))
    return out


def enumerate_subconfigurations(
    eta: TwoSpeciesConfiguration,
) -> list[TwoSpeciesConfiguration]:
    """All component-wise sub-patterns of ``eta``.

    Returns ``2**n_plus * 2**n_minus`` configurations, plus-mask major and
    minus-mask minor, each mask enumerated in ascending order.
    """
    _check_size(eta, "enumerate_subconfigurations")
    plus_subsets = _subsets(eta.plus)
    minus_subsets = _subsets(eta.minus)
    out = []
    for ps in plus_subsets:
        for ms in minus_subsets:
            sub = TwoSpeciesConfiguration.__new__(TwoSpeciesConfiguration)
            # subsets of a valid configuration cannot violate its invariants
            sub.plus = ps
            sub.minus = ms
            out.append(sub)
    return out


def lp_exponential(
    f_plus: PointFunction,
    f_minus: PointFunction,
    eta: TwoSpeciesConfiguration,
) -> float:
    """Product of ``f_plus`` over the plus points and ``f_minus`` over the
    minus points; the empty configuration gives 1."""
    out = 1.0
    for x in eta.plus:
        out *= f_plus(x)
    for x in eta.minus:
        out *= f_minus(x)
    return out


def k_transform(g: ConfigFunction, gamma: TwoSpeciesConfiguration) -> float:
    """Sum of ``g`` over every sub-pattern of the finite configuration."""
    _check_size(gamma, "k_transform")
    return float(sum(g(xi) for xi in enumerate_subconfigurations(gamma)))


def k_inverse(f: ConfigFunction, eta: TwoSpeciesConfiguration) -> float:
    """Alternating subset sum inverting :func:`k_transform`.

    The sign of each sub-pattern ``xi`` is ``(−1)`` to the number of points
    of ``eta`` outside ``xi``, counted over both species.
    """
    _check_size(eta, "k_inverse")
    total_size = eta.size()
    out = 0.0
    for xi in enumerate_subconfigurations(eta):
        sign = -1.0 if (total_size - xi.size()) % 2 else 1.0
        out += sign * f(xi)
    return float(out)
