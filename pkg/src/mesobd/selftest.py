"""Built-in exactness checks behind the ``selftest`` CLI subcommand.

Runs the combinatorial transform identities and the convolution-path
equivalence with fixed seeds; both must hold to tight tolerances on a
correct build, independent of platform.
"""

from __future__ import annotations

import numpy as np

from .combinatorics import k_inverse, k_transform, lp_exponential
from .geometry import Kernel, TorusDomain, TwoSpeciesConfiguration
from .kinetic import convolve_periodic


def _random_config(rng, n_plus, n_minus, side=10.0, dim=1):
    pts = rng.uniform(0.0, side, size=(n_plus + n_minus, dim))
    return TwoSpeciesConfiguration(pts[:n_plus], pts[n_plus:])


def _tabulated_function(rng, eta):
    """A random function of sub-patterns, total on subsets of ``eta``."""
    values = {}

    def key(cfg):
        return (cfg.plus.tobytes(), cfg.minus.tobytes())

    def g(cfg):
        k = key(cfg)
        if k not in values:
            values[k] = float(rng.normal())
        return values[k]

    return g


def check_combinatorics(tol: float = 1e-12) -> float:
    """Worst deviation across transform round trips and the product identity."""
    rng = np.random.default_rng(20252025)
    worst = 0.0
    for _ in range(20):
        eta = _random_config(rng, int(rng.integers(0, 4)), int(rng.integers(0, 3)))
        g = _tabulated_function(rng, eta)
        f = _tabulated_function(rng, eta)
        worst = max(worst, abs(k_inverse(lambda x: k_transform(g, x), eta) - g(eta)))
        worst = max(worst, abs(k_transform(lambda x: k_inverse(f, x), eta) - f(eta)))
        c = float(rng.uniform(-1.0, 1.0))
        ident = k_transform(lambda x: lp_exponential(lambda p: c, lambda p: c, x), eta)
        expect = (1.0 + c) ** eta.size()
        worst = max(worst, abs(ident - expect))
    return worst


def check_convolution(tol: float = 1e-10) -> float:
    """Worst relative gap between the fast and direct convolution paths."""
    rng = np.random.default_rng(321)
    worst = 0.0
    cases = [(1, 16), (1, 64), (2, 16)]
    for dim, m in cases:
        dom = TorusDomain(dim, 10.0)
        field = rng.uniform(0.0, 2.0, size=(m,) * dim)
        for k in (Kernel.tophat(1.3, 0.8), Kernel.truncated_gaussian(0.7, 0.4, 1.5)):
            a = convolve_periodic(field, k, dom, m, method="fft")
            b = convolve_periodic(field, k, dom, m, method="direct")
            scale = max(float(np.max(np.abs(b))), 1e-30)
            worst = max(worst, float(np.max(np.abs(a - b))) / scale)
    return worst


def run(verbose: bool = True) -> bool:
    checks = [
        ("combinatorics identities", check_combinatorics, 1e-12),
        ("convolution fft-vs-direct", check_convolution, 1e-10),
    ]
    ok = True
    for name, fn, tol in checks:
        worst = fn()
        passed = worst <= tol
        ok &= passed
        if verbose:
            print(f"selftest {name}: {'PASS' if passed else 'FAIL'} "
                  f"(worst {worst:.3e}, tolerance {tol:.0e})")
    return ok
