import math

import numpy as np
import pytest

from mesobd.geometry import (
    Kernel,
    TorusDomain,
    TwoSpeciesConfiguration,
    kernel_eval,
    kernel_mass,
    torus_distance,
)
from mesobd.models import (
    BdlpInGlauber,
    BdlpPair,
    DensityBranching,
    GlauberPair,
    apply_vlasov_scaling,
    birth_intensity,
    birth_total_bound,
    death_intensity,
    feasible_region_scan,
    pointwise_domination_ratio,
    sample_birth,
    validate_conditions,
)
from mesobd.presets import default_models

DOM = TorusDomain(1, 10.0)


def bdlp(immigration=0.2, **kw):
    base = dict(
        mortality_plus=1.5,
        mortality_minus=1.5,
        compete_minus=Kernel.tophat(1.0, 0.5),
        branch_minus=Kernel.tophat(0.3, 0.5),
        compete_plus=Kernel.tophat(1.0, 0.5),
        branch_plus=Kernel.tophat(0.3, 0.5),
        cross_death=Kernel.tophat(0.5, 0.5),
        cross_birth=Kernel.tophat(0.1, 0.5),
        immigration=immigration,
    )
    base.update(kw)
    return BdlpPair(**base)


def wr(z=0.3, amp=1.0, radius=0.5):
    k = Kernel.tophat(amp, radius)
    return GlauberPair.widom_rowlinson(z, z, k, k)


def random_cfg(rng, n_plus, n_minus, dom=DOM):
    pts = rng.uniform(0.0, dom.side, size=(n_plus + n_minus, dom.dim))
    return TwoSpeciesConfiguration(pts[:n_plus], pts[n_plus:])


ALL_MODELS = [m for m, _ in default_models().values()]


class TestDeathIntensity:
    def test_bdlp_minus_empty(self):
        m = bdlp()
        val = death_intensity(m, "minus", [1.0], TwoSpeciesConfiguration.empty(1), DOM)
        assert val == 1.5

    def test_glauber_s0_constant(self):
        rng = np.random.default_rng(0)
        m = wr()
        cfg = random_cfg(rng, 5, 4)
        assert death_intensity(m, "minus", [9.0], cfg, DOM) == 1.0
        assert death_intensity(m, "plus", [9.0], cfg, DOM) == 1.0

    def test_glauber_split_attenuates(self):
        k = Kernel.tophat(1.0, 1.0)
        m = GlauberPair(0.5, 0.3, 0.3, k, k, Kernel.zero(), Kernel.zero())
        cfg = TwoSpeciesConfiguration(np.array([[5.0]]), np.zeros((0, 1)))
        val = death_intensity(m, "minus", [5.4], cfg, DOM)
        assert val == pytest.approx(math.exp(-0.5))

    def test_density_branching_exponent(self):
        m = DensityBranching(
            mortality_plus=2.0,
            crowding_plus=Kernel.tophat(0.7, 1.0),
            self_repulsion_minus=Kernel.zero(),
            parent_suppression=Kernel.zero(),
            branch_plus=Kernel.tophat(0.3, 0.5),
            activity_minus=0.2,
        )
        cfg = TwoSpeciesConfiguration(np.array([[5.0]]), np.zeros((0, 1)))
        val = death_intensity(m, "plus", [5.5], cfg, DOM)
        assert val == pytest.approx(2.0 * math.exp(0.7))

    def test_bdlp_plus_matches_double_loop(self):
        rng = np.random.default_rng(1)
        m = bdlp()
        cfg = random_cfg(rng, 12, 9)
        x = rng.uniform(0, 10, 1)
        brute = m.mortality_plus
        for y in cfg.plus:
            brute += kernel_eval(m.compete_plus, torus_distance(x, y, DOM))
        for y in cfg.minus:
            brute += kernel_eval(m.cross_death, torus_distance(x, y, DOM))
        assert death_intensity(m, "plus", x, cfg, DOM) == pytest.approx(brute)

    def test_containment_violation(self):
        m = bdlp()
        cfg = TwoSpeciesConfiguration(np.zeros((0, 1)), np.array([[2.0]]))
        with pytest.raises(ValueError):
            death_intensity(m, "minus", [2.0], cfg, DOM)

    def test_nonnegative_randomized(self):
        rng = np.random.default_rng(2)
        for m in ALL_MODELS:
            for _ in range(20):
                cfg = random_cfg(rng, int(rng.integers(0, 8)), int(rng.integers(0, 8)))
                x = rng.uniform(0, 10, 1)
                for sp in ("plus", "minus"):
                    assert death_intensity(m, sp, x, cfg, DOM) >= 0.0
                    assert birth_intensity(m, sp, x, cfg, DOM) >= 0.0


class TestBirthIntensity:
    def test_bdlp_minus_empty(self):
        assert birth_intensity(
            bdlp(immigration=0.7), "minus", [1.0], TwoSpeciesConfiguration.empty(1), DOM
        ) == pytest.approx(0.7)

    def test_glauber_plus_empty(self):
        m = GlauberPair.widom_rowlinson(
            0.4, 0.3, Kernel.tophat(1, 0.5), Kernel.tophat(1, 0.5)
        )
        val = birth_intensity(m, "plus", [1.0], TwoSpeciesConfiguration.empty(1), DOM)
        assert val == pytest.approx(0.4)

    def test_scaled_glauber_activity(self):
        m = apply_vlasov_scaling(wr(z=0.3), 4)
        val = birth_intensity(m, "minus", [1.0], TwoSpeciesConfiguration.empty(1), DOM)
        assert val == pytest.approx(1.2)

    def test_density_branching_three_parents(self):
        rng = np.random.default_rng(3)
        m = DensityBranching(
            mortality_plus=2.0,
            crowding_plus=Kernel.tophat(0.3, 0.5),
            self_repulsion_minus=Kernel.tophat(0.5, 0.5),
            parent_suppression=Kernel.tophat(0.6, 0.8),
            branch_plus=Kernel.truncated_gaussian(0.9, 0.3, 0.9),
            activity_minus=0.2,
        )
        cfg = random_cfg(rng, 3, 5)
        x = rng.uniform(0, 10, 1)
        brute = 0.0
        for y in cfg.plus:
            e = sum(
                kernel_eval(m.parent_suppression, torus_distance(y, z, DOM))
                for z in cfg.minus
            )
            brute += math.exp(-e) * kernel_eval(m.branch_plus, torus_distance(x, y, DOM))
        assert birth_intensity(m, "plus", x, cfg, DOM) == pytest.approx(brute)


def grid_quadrature_birth(m, sp, cfg, dom, points=128):
    h = dom.side / points
    total = 0.0
    for i in range(points):
        x = np.array([h * (i + 0.5)])
        total += birth_intensity(m, sp, x, cfg, dom) * h
    return total


class TestBirthTotalBound:
    def test_bdlp_minus_empty(self):
        m = bdlp(immigration=0.4)
        assert birth_total_bound(
            m, "minus", TwoSpeciesConfiguration.empty(1), DOM
        ) == pytest.approx(4.0)

    def test_glauber_volume_bound(self):
        rng = np.random.default_rng(4)
        m = wr(z=0.25)
        cfg = random_cfg(rng, 6, 6)
        assert birth_total_bound(m, "minus", cfg, DOM) == pytest.approx(2.5)

    def test_parent_kernel_exact_vs_quadrature(self):
        # smooth kernels: midpoint quadrature on the periodic box is
        # accurate enough to confirm the bound is the exact integral
        rng = np.random.default_rng(5)
        m = bdlp(
            branch_plus=Kernel.truncated_gaussian(0.8, 0.2, 1.0),
            cross_birth=Kernel.truncated_gaussian(0.5, 0.25, 1.2),
        )
        cfg = random_cfg(rng, 4, 3)
        bound = birth_total_bound(m, "plus", cfg, DOM)
        expected = 4 * kernel_mass(m.branch_plus, 1) + 3 * kernel_mass(m.cross_birth, 1)
        assert bound == pytest.approx(expected, rel=1e-12)
        quad = grid_quadrature_birth(m, "plus", cfg, DOM)
        assert bound == pytest.approx(quad, abs=1e-6)

    def test_dominates_quadrature_randomized(self):
        # midpoint quadrature of a tophat parent term is only O(h) accurate
        # and can overshoot the exact integral; allow exactly that bias
        from mesobd.models import rate_table

        rng = np.random.default_rng(6)
        h = DOM.side / 128
        for m in ALL_MODELS:
            for _ in range(5):
                cfg = random_cfg(rng, int(rng.integers(0, 6)), int(rng.integers(0, 6)))
                for sp in ("plus", "minus"):
                    bound = birth_total_bound(m, sp, cfg, DOM)
                    quad = grid_quadrature_birth(m, sp, cfg, DOM)
                    bias = sum(
                        pc.kernel.amplitude * cfg.species(pc.source).shape[0] * h
                        for pc in rate_table(m).birth[sp].parents
                    )
                    assert bound >= quad - bias - 1e-9

    def test_density_branching_weights_exact(self):
        rng = np.random.default_rng(7)
        m = DensityBranching(
            mortality_plus=2.0,
            crowding_plus=Kernel.tophat(0.3, 0.5),
            self_repulsion_minus=Kernel.tophat(0.5, 0.5),
            parent_suppression=Kernel.truncated_gaussian(0.6, 0.3, 1.0),
            branch_plus=Kernel.truncated_gaussian(0.9, 0.2, 1.0),
            activity_minus=0.2,
        )
        cfg = random_cfg(rng, 5, 4)
        bound = birth_total_bound(m, "plus", cfg, DOM)
        quad = grid_quadrature_birth(m, "plus", cfg, DOM)
        assert bound == pytest.approx(quad, abs=1e-6)


class TestSampleBirth:
    def test_immigration_never_rejects_and_uniform(self):
        rng = np.random.default_rng(8)
        m = bdlp(
            immigration=1.0,
            compete_minus=Kernel.zero(),
            branch_minus=Kernel.zero(),
            compete_plus=Kernel.zero(),
            branch_plus=Kernel.zero(),
            cross_death=Kernel.zero(),
            cross_birth=Kernel.zero(),
        )
        cfg = TwoSpeciesConfiguration.empty(1)
        draws = [sample_birth(m, "minus", cfg, DOM, rng) for _ in range(4000)]
        assert all(d is not None for d in draws)
        xs = np.array([d[0] for d in draws])
        counts, _ = np.histogram(xs, bins=10, range=(0, 10))
        expected = 400.0
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        # chi-square with 9 dof: mean 9, sd sqrt(18)
        assert chi2 < 9 + 3 * math.sqrt(18)

    def test_glauber_empty_accepts_uniform(self):
        rng = np.random.default_rng(9)
        m = wr(z=0.3)
        cfg = TwoSpeciesConfiguration.empty(1)
        draws = [sample_birth(m, "plus", cfg, DOM, rng) for _ in range(500)]
        assert all(d is not None for d in draws)

    def test_blocked_acceptance_profile(self):
        # one blocking plus particle at the center; accepted minus births
        # must follow exp(-psi(distance)) cell by cell
        rng = np.random.default_rng(10)
        amp = 1.2
        m = wr(z=1.0, amp=amp, radius=1.0)
        blocker = 5.0  # ball [4, 6] aligns with the 0.5-wide histogram bins
        cfg = TwoSpeciesConfiguration(np.array([[blocker]]), np.zeros((0, 1)))
        accepted = []
        for _ in range(100_000):
            d = sample_birth(m, "minus", cfg, DOM, rng)
            if d is not None:
                accepted.append(d[0])
        xs = np.array(accepted)
        edges = np.linspace(0.0, 10.0, 21)
        counts, _ = np.histogram(xs, bins=edges)
        centers = 0.5 * (edges[:-1] + edges[1:])
        dist = np.minimum(np.abs(centers - blocker), 10.0 - np.abs(centers - blocker))
        weights = np.where(dist <= 1.0, math.exp(-amp), 1.0)
        probs = weights / weights.sum()
        n = counts.sum()
        chi2 = float(np.sum((counts - n * probs) ** 2 / (n * probs)))
        dof = len(counts) - 1
        assert chi2 < dof + 3 * math.sqrt(2 * dof)

    def test_offspring_displacement_kernel(self):
        # single parent, tophat displacement: offspring uniform in the ball
        rng = np.random.default_rng(11)
        m = bdlp(immigration=0.0)
        parent = 5.0
        cfg = TwoSpeciesConfiguration(np.zeros((0, 1)), np.array([[parent]]))
        draws = np.array(
            [sample_birth(m, "minus", cfg, DOM, rng)[0] for _ in range(5000)]
        )
        assert np.all(np.abs(draws - parent) <= 0.5 + 1e-12)
        counts, _ = np.histogram(draws, bins=10, range=(4.5, 5.5))
        expected = 500.0
        chi2 = float(np.sum((counts - expected) ** 2 / expected))
        assert chi2 < 9 + 3 * math.sqrt(18)

    def test_zero_bound_rejected(self):
        m = bdlp(immigration=0.0)
        with pytest.raises(ValueError):
            sample_birth(m, "minus", TwoSpeciesConfiguration.empty(1), DOM,
                         np.random.default_rng(0))


class TestVlasovScaling:
    def test_level_one_is_identity(self):
        rng = np.random.default_rng(12)
        for m in ALL_MODELS:
            scaled = apply_vlasov_scaling(m, 1)
            for _ in range(10):
                cfg = random_cfg(rng, int(rng.integers(0, 5)), int(rng.integers(0, 5)))
                x = rng.uniform(0, 10, 1)
                for sp in ("plus", "minus"):
                    assert death_intensity(scaled, sp, x, cfg, DOM) == death_intensity(
                        m, sp, x, cfg, DOM
                    )
                    assert birth_intensity(scaled, sp, x, cfg, DOM) == birth_intensity(
                        m, sp, x, cfg, DOM
                    )

    def test_glauber_level_four(self):
        m = apply_vlasov_scaling(wr(z=0.3), 4)
        empty = TwoSpeciesConfiguration.empty(1)
        assert birth_intensity(m, "plus", [0.0], empty, DOM) == pytest.approx(1.2)
        assert death_intensity(m, "plus", [0.0], empty, DOM) == 1.0

    def test_bdlp_cross_death_weakened(self):
        m = bdlp()
        scaled = apply_vlasov_scaling(m, 10)
        d = 0.3
        cfg = TwoSpeciesConfiguration(np.zeros((0, 1)), np.array([[5.0 + d]]))
        expected = m.mortality_plus + kernel_eval(m.cross_death, d) / 10.0
        assert death_intensity(scaled, "plus", [5.0], cfg, DOM) == pytest.approx(
            expected
        )

    def test_death_monotone_in_level(self):
        rng = np.random.default_rng(13)
        for m, limit_plus, limit_minus in [
            (bdlp(), 1.5, 1.5),
            (default_models()["bdlp_in_glauber"][0], 2.2, 1.0),
        ]:
            cfg = random_cfg(rng, 6, 6)
            x = rng.uniform(0, 10, 1)
            for sp, limit in (("plus", limit_plus), ("minus", limit_minus)):
                vals = [
                    death_intensity(apply_vlasov_scaling(m, n), sp, x, cfg, DOM)
                    for n in (1, 2, 4, 16, 256, 10_000)
                ]
                assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))
                assert vals[-1] == pytest.approx(limit, abs=1e-3)

    def test_density_branching_death_limit(self):
        rng = np.random.default_rng(14)
        m = default_models()["density_branching"][0]
        cfg = random_cfg(rng, 8, 4)
        x = rng.uniform(0, 10, 1)
        val = death_intensity(apply_vlasov_scaling(m, 100_000), "plus", x, cfg, DOM)
        assert val == pytest.approx(m.mortality_plus, rel=1e-4)

    def test_invalid_level(self):
        with pytest.raises(ValueError):
            apply_vlasov_scaling(wr(), 0)


class TestValidators:
    def test_wr_criterion_values(self):
        # C(psi) = 1 kernel: tophat(ln 2, 1.0) in one dimension
        k = Kernel.tophat(math.log(2.0), 1.0)
        good = GlauberPair.widom_rowlinson(0.3, 0.3, k, k)
        bad = GlauberPair.widom_rowlinson(0.4, 0.4, k, k)
        assert validate_conditions(good, 0.0, 0.0).passed
        assert not validate_conditions(bad, 0.0, 0.0).passed

    def test_all_zero_kernels_reduce_to_activity_bound(self):
        z = Kernel.zero()
        m = GlauberPair(0.0, 0.4, 0.2, z, z, z, z)
        # conditions collapse to z- < e^beta and z+ < e^alpha
        assert validate_conditions(m, 0.0, 0.0).passed
        assert not validate_conditions(m, 0.0, -2.0).passed
        assert not validate_conditions(m, -1.0, 0.0).passed

    def test_monotone_in_activity(self):
        rng = np.random.default_rng(15)
        for _ in range(10):
            k1 = Kernel.tophat(rng.uniform(0.1, 2.0), rng.uniform(0.2, 1.0))
            k2 = Kernel.tophat(rng.uniform(0.1, 2.0), rng.uniform(0.2, 1.0))
            alpha, beta = rng.uniform(-1, 1, 2)
            seen_fail = False
            for z in np.linspace(0.05, 3.0, 12):
                m = GlauberPair.widom_rowlinson(z, z, k1, k2)
                ok = validate_conditions(m, alpha, beta).passed
                if seen_fail:
                    assert not ok
                seen_fail = seen_fail or not ok

    def test_presets_validate(self):
        for name, (m, (a, b)) in default_models().items():
            report = validate_conditions(m, a, b)
            assert report.passed, f"{name} failed: {report.to_dict()}"

    def test_pointwise_domination(self):
        assert pointwise_domination_ratio(
            Kernel.tophat(0.3, 0.5), Kernel.tophat(1.0, 0.5)
        ) == pytest.approx(0.3)
        assert pointwise_domination_ratio(
            Kernel.tophat(0.3, 0.6), Kernel.tophat(1.0, 0.5)
        ) == math.inf
        assert pointwise_domination_ratio(Kernel.zero(), Kernel.tophat(1, 1)) == 0.0

    def test_nonfinite_exponents_rejected(self):
        with pytest.raises(ValueError):
            validate_conditions(wr(), math.nan, 0.0)

    def test_bdlp_witnesses_override(self):
        m, (a, b) = default_models()["bdlp_pair"]
        report = validate_conditions(
            m, a, b, witnesses={"theta_branch_plus": 0.3, "slack_branch_plus": 0.0}
        )
        assert report.passed


class TestFeasibleScan:
    def test_finds_feasible_wr(self):
        k = Kernel.tophat(math.log(2.0), 1.0)  # C = 1
        m = GlauberPair.widom_rowlinson(0.3, 0.3, k, k)
        hit = feasible_region_scan(m, (-3.0, 3.0), (-3.0, 3.0), 0.5)
        assert hit is not None
        a, b, report = hit
        assert report.passed
        assert validate_conditions(m, a, b).passed

    def test_infeasible_returns_none(self):
        k = Kernel.tophat(math.log(2.0), 1.0)
        m = GlauberPair.widom_rowlinson(10.0, 10.0, k, k)
        assert feasible_region_scan(m, (-3.0, 3.0), (-3.0, 3.0), 0.5) is None

    def test_bad_step(self):
        with pytest.raises(ValueError):
            feasible_region_scan(wr(), (-1, 1), (-1, 1), 0.0)
        with pytest.raises(ValueError):
            feasible_region_scan(wr(), (1, -1), (-1, 1), 0.5)
