import math

import numpy as np
import pytest

from mesobd.geometry import Kernel, TorusDomain, TwoSpeciesConfiguration
from mesobd.models import (
    BdlpPair,
    DensityBranching,
    GlauberPair,
    birth_total_bound,
    death_intensity,
)
from mesobd.simulate import (
    ExplosionError,
    SimulationState,
    estimate_density_field,
    estimate_pair_correlation,
    init_poisson,
    init_poisson_piecewise,
    simulate,
    total_event_rate,
)

DOM = TorusDomain(1, 10.0)


def frozen_model():
    z = Kernel.zero()
    return BdlpPair(0.0, 0.0, z, z, z, z, z, z, 0.0)


def immigration_death(z=1.0, death=1.0):
    zk = Kernel.zero()
    return BdlpPair(1.0, death, zk, zk, zk, zk, zk, zk, z)


def wr_model(z=0.3):
    k = Kernel.tophat(1.0, 0.5)
    return GlauberPair.widom_rowlinson(z, z, k, k)


class TestInitPoisson:
    def test_zero_intensity_empty(self):
        cfg = init_poisson(DOM, 0.0, 0.0, np.random.default_rng(0))
        assert cfg.size() == 0

    def test_poisson_law(self):
        rng = np.random.default_rng(1)
        counts = np.array(
            [init_poisson(DOM, 2.0, 0.0, rng).n_plus for _ in range(10_000)]
        )
        mean, var = counts.mean(), counts.var(ddof=1)
        # Poisson(20): sd of the sample mean and of the sample variance
        assert abs(mean - 20.0) < 3 * math.sqrt(20.0 / 10_000)
        assert abs(var - 20.0) < 3 * math.sqrt((3 * 400 + 20 - 400) / 10_000)

    def test_disjointness(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            cfg = init_poisson(DOM, 1.0, 1.0, rng)
            allpts = cfg.all_points()
            assert np.unique(allpts, axis=0).shape[0] == allpts.shape[0]

    def test_piecewise_profile(self):
        rng = np.random.default_rng(3)
        profile = np.array([5.0] + [0.0] * 9)  # mass only in the first cell
        for _ in range(20):
            cfg = init_poisson_piecewise(DOM, profile, 0.0 * profile, rng)
            assert np.all(cfg.plus < 1.0)
            assert cfg.n_minus == 0

    def test_negative_intensity(self):
        with pytest.raises(ValueError):
            init_poisson(DOM, -1.0, 0.0, np.random.default_rng(0))


class TestTotalEventRate:
    def test_empty_bdlp(self):
        st = SimulationState(
            immigration_death(z=0.7), DOM, TwoSpeciesConfiguration.empty(1)
        )
        assert total_event_rate(None, st, DOM) == pytest.approx(7.0)

    def test_empty_glauber(self):
        m = GlauberPair.widom_rowlinson(
            0.4, 0.3, Kernel.tophat(1, 0.5), Kernel.tophat(1, 0.5)
        )
        st = SimulationState(m, DOM, TwoSpeciesConfiguration.empty(1))
        assert st.total_event_rate() == pytest.approx(7.0)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(4)
        m = BdlpPair(
            1.5, 1.5,
            Kernel.tophat(1.0, 0.5), Kernel.tophat(0.3, 0.5),
            Kernel.tophat(1.0, 0.5), Kernel.tophat(0.3, 0.5),
            Kernel.tophat(0.5, 0.5), Kernel.tophat(0.1, 0.5), 0.2,
        )
        cfg = init_poisson(DOM, 1.0, 1.0, rng)
        st = SimulationState(m, DOM, cfg)
        brute = 0.0
        for sp in ("plus", "minus"):
            pts = cfg.species(sp)
            for i in range(pts.shape[0]):
                rest = TwoSpeciesConfiguration(
                    np.delete(cfg.plus, i, axis=0) if sp == "plus" else cfg.plus,
                    np.delete(cfg.minus, i, axis=0) if sp == "minus" else cfg.minus,
                )
                brute += death_intensity(m, sp, pts[i], rest, DOM)
            brute += birth_total_bound(m, sp, cfg, DOM)
        assert st.total_event_rate() == pytest.approx(brute, rel=1e-9)


class TestSimulate:
    def test_all_rates_zero_state_frozen(self):
        rng = np.random.default_rng(5)
        init = init_poisson(DOM, 1.0, 1.0, rng)
        traj = simulate(frozen_model(), DOM, init, 5.0, [0.0, 2.5, 5.0], rng,
                        record_configs=True)
        assert traj.events == 0
        assert np.all(traj.n_plus == init.n_plus)
        assert np.all(traj.n_minus == init.n_minus)
        np.testing.assert_array_equal(traj.configs[-1].plus, init.plus)

    def test_pure_death_mean(self):
        rng = np.random.default_rng(6)
        n0, reps, t = 60, 60, 1.0
        finals = []
        for _ in range(reps):
            init = TwoSpeciesConfiguration(
                np.zeros((0, 1)), rng.uniform(0, 10, size=(n0, 1))
            )
            traj = simulate(immigration_death(z=0.0), DOM, init, t, [t], rng)
            finals.append(traj.n_minus[-1])
        p = math.exp(-t)
        mean = np.mean(finals)
        sd = math.sqrt(n0 * p * (1 - p) / reps)
        assert abs(mean - n0 * p) < 3 * sd

    def test_determinism_bit_for_bit(self):
        m = wr_model()
        out = []
        for _ in range(2):
            rng = np.random.default_rng(77)
            init = init_poisson(DOM, 0.5, 0.5, rng)
            traj = simulate(m, DOM, init, 4.0, list(np.linspace(0, 4, 9)), rng,
                            record_configs=True)
            out.append(traj)
        a, b = out
        np.testing.assert_array_equal(a.n_plus, b.n_plus)
        np.testing.assert_array_equal(a.n_minus, b.n_minus)
        np.testing.assert_array_equal(a.configs[-1].plus, b.configs[-1].plus)
        np.testing.assert_array_equal(a.configs[-1].minus, b.configs[-1].minus)
        assert a.events == b.events

    def test_observer_validation(self):
        rng = np.random.default_rng(8)
        init = TwoSpeciesConfiguration.empty(1)
        with pytest.raises(ValueError):
            simulate(wr_model(), DOM, init, 1.0, [0.5, 0.5], rng)
        with pytest.raises(ValueError):
            simulate(wr_model(), DOM, init, 1.0, [0.5, 2.0], rng)
        with pytest.raises(ValueError):
            simulate(wr_model(), DOM, init, -1.0, [], rng)

    def test_counts_monotone_for_immigration_only(self):
        rng = np.random.default_rng(9)
        m = BdlpPair(
            0.0, 0.0, Kernel.zero(), Kernel.zero(), Kernel.zero(), Kernel.zero(),
            Kernel.zero(), Kernel.zero(), 1.0,
        )
        traj = simulate(m, DOM, TwoSpeciesConfiguration.empty(1), 3.0,
                        list(np.linspace(0, 3, 13)), rng)
        assert np.all(np.diff(traj.n_minus) >= 0)
        assert traj.n_minus[0] == 0

    def test_explosion_guard(self):
        rng = np.random.default_rng(10)
        m = BdlpPair(
            0.0, 0.1,
            Kernel.zero(), Kernel.tophat(3.0, 0.5),
            Kernel.zero(), Kernel.zero(), Kernel.zero(), Kernel.zero(), 2.0,
        )
        init = init_poisson(DOM, 0.0, 2.0, rng)
        with pytest.raises(ExplosionError):
            simulate(m, DOM, init, 50.0, [50.0], rng, explosion_cap=300)

    def test_invalid_init_rejected(self):
        rng = np.random.default_rng(11)
        bad = TwoSpeciesConfiguration(np.array([[11.5]]), np.zeros((0, 1)))
        with pytest.raises(ValueError):
            simulate(wr_model(), DOM, bad, 1.0, [], rng)


class TestCacheCoherence:
    def drive(self, m, init_plus, init_minus, events, seed):
        rng = np.random.default_rng(seed)
        init = init_poisson(DOM, init_plus, init_minus, rng)
        st = SimulationState(m, DOM, init)
        done = 0
        while done < events:
            t = st.step(rng, math.inf)
            if t is None:
                break
            st.time = t
            st.apply_pending(rng)
            done += 1
        return st

    def test_additive_channels_drift(self):
        m = BdlpPair(
            1.2, 1.5,
            Kernel.tophat(0.4, 0.5), Kernel.tophat(0.3, 0.5),
            Kernel.tophat(0.4, 0.5), Kernel.tophat(0.3, 0.5),
            Kernel.tophat(0.2, 0.5), Kernel.tophat(0.4, 0.5), 2.0,
        )
        st = self.drive(m, 1.0, 1.0, 10_000, 12)
        assert st.events >= 10_000
        assert st.cache_drift() <= 1e-9

    def test_exponential_channels_drift(self):
        k = Kernel.tophat(0.8, 0.5)
        m = GlauberPair(0.5, 2.0, 2.0, k, k, Kernel.zero(), Kernel.zero())
        st = self.drive(m, 1.0, 1.0, 10_000, 13)
        assert st.events >= 10_000
        assert st.cache_drift() <= 1e-9

    def test_weight_channels_drift(self):
        m = DensityBranching(
            mortality_plus=1.2,
            crowding_plus=Kernel.tophat(0.3, 0.5),
            self_repulsion_minus=Kernel.tophat(0.5, 0.5),
            parent_suppression=Kernel.tophat(0.6, 0.5),
            branch_plus=Kernel.tophat(0.8, 0.5),
            activity_minus=2.0,
        )
        st = self.drive(m, 2.0, 2.0, 3000, 14)
        assert st.cache_drift() <= 1e-9


class TestDensityField:
    def test_empty(self):
        field = estimate_density_field([TwoSpeciesConfiguration.empty(1)], 10, DOM)
        assert np.all(field.rho_plus == 0.0) and np.all(field.rho_minus == 0.0)

    def test_single_particle_cell(self):
        cfg = TwoSpeciesConfiguration(np.array([[2.3]]), np.zeros((0, 1)))
        field = estimate_density_field([cfg], 10, DOM)
        assert field.rho_plus[2] == pytest.approx(1.0)
        assert field.rho_plus.sum() == pytest.approx(1.0)

    def test_poisson_flat(self):
        rng = np.random.default_rng(15)
        snaps = [init_poisson(DOM, 2.0, 0.0, rng) for _ in range(200)]
        field = estimate_density_field(snaps, 10, DOM)
        # each cell holds Poisson(2*1*200)/200
        sd = math.sqrt(400.0) / 200.0
        assert np.all(np.abs(field.rho_plus - 2.0) < 4 * sd)
        assert abs(field.rho_plus.mean() - 2.0) < 3 * sd / math.sqrt(10)

    def test_two_dimensional(self):
        dom2 = TorusDomain(2, 4.0)
        cfg = TwoSpeciesConfiguration(np.array([[1.1, 3.2]]), np.zeros((0, 2)))
        field = estimate_density_field([cfg], 4, dom2)
        assert field.rho_plus[1, 3] == pytest.approx(1.0)


class TestPairCorrelation:
    def test_single_particle_no_pairs(self):
        snaps = [
            TwoSpeciesConfiguration(np.array([[float(i)]]), np.zeros((0, 1)))
            for i in range(5)
        ]
        _, k2 = estimate_pair_correlation(snaps, ("plus", "plus"),
                                          np.linspace(0, 2, 5), DOM)
        assert np.all(k2 == 0.0)

    def test_two_fixed_particles(self):
        cfg = TwoSpeciesConfiguration(np.array([[2.0], [3.2]]), np.zeros((0, 1)))
        mids, k2 = estimate_pair_correlation([cfg], ("plus", "plus"),
                                             [0.0, 0.5, 1.0, 1.5], DOM)
        assert k2[0] == 0.0 and k2[1] == 0.0
        # two ordered pairs in the [1.0, 1.5) shell of volume 2*0.5
        assert k2[2] == pytest.approx(2.0 / (10.0 * 1.0))

    def test_cross_species(self):
        cfg = TwoSpeciesConfiguration(np.array([[2.0]]), np.array([[2.4]]))
        _, k2 = estimate_pair_correlation([cfg], ("plus", "minus"),
                                          [0.0, 0.5, 1.0], DOM)
        assert k2[0] == pytest.approx(1.0 / 10.0)
        assert k2[1] == 0.0

    def test_poisson_flat_squared_density(self):
        # count fluctuations are shared across bins, so the bins move
        # together; tolerances are ~4 sd of the estimator
        rng = np.random.default_rng(16)
        rho = 1.5
        snaps = [init_poisson(DOM, rho, 0.0, rng) for _ in range(1000)]
        _, k2 = estimate_pair_correlation(snaps, ("plus", "plus"),
                                          np.linspace(0.0, 2.0, 5), DOM)
        assert np.all(np.abs(k2 - rho**2) < 0.3)
        assert abs(k2.mean() - rho**2) < 0.15

    def test_edges_validation(self):
        with pytest.raises(ValueError):
            estimate_pair_correlation([], ("plus", "plus"), [0.0, 6.0], DOM)
