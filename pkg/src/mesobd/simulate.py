"""Exact event-driven simulation of the two-species birth-death process.

The jump chain is statistically exact: waiting times are exponential in the
total event rate, where births enter through certified upper bounds
(:func:`mesobd.models.birth_total_bound`) and a rejected thinning proposal
consumes the event without changing the state.  Death rates are exact and
cached per particle; caches are updated locally through cell lists (cell
side at least the largest query cutoff, falling back to a full scan when
the box is too small for useful cells) and rebuilt from scratch every
``resync_interval`` events to stop float drift.

All randomness flows through a single ``numpy.random.Generator``, so equal
seeds give bit-identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Optional, Sequence

import numpy as np

from .geometry import TorusDomain, TwoSpeciesConfiguration, kernel_mass
from .models import _sample_kernel_offset, rate_table

__all__ = [
    "ExplosionError",
    "Trajectory",
    "DensityField",
    "SimulationState",
    "init_poisson",
    "init_poisson_piecewise",
    "simulate",
    "total_event_rate",
    "estimate_density_field",
    "estimate_pair_correlation",
]

_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


class ExplosionError(RuntimeError):
    """Raised when the particle count exceeds the configured cap."""


@dataclass
class Trajectory:
    """Counts (and optionally full configurations) at the observer times."""

    times: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray
    configs: Optional[list] = None
    events: int = 0

    def write_csv(self, path):
        with open(path, "w", newline="\n") as fh:
            fh.write("t,n_plus,n_minus\n")
            for t, np_, nm in zip(self.times, self.n_plus, self.n_minus):
                fh.write(f"{float(t)!r},{int(np_)},{int(nm)}\n")


@dataclass
class DensityField:
    """Per-cell densities (counts per unit volume, snapshot-averaged)."""

    dom: TorusDomain
    cells_per_axis: int
    rho_plus: np.ndarray
    rho_minus: np.ndarray

    @property
    def cell_volume(self) -> float:
        return (self.dom.side / self.cells_per_axis) ** self.dom.dim

    def cell_centers(self) -> np.ndarray:
        """(n_cells, dim) array of cell centers, row-major cell order."""
        h = self.dom.side / self.cells_per_axis
        axes = [h * (np.arange(self.cells_per_axis) + 0.5)] * self.dom.dim
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def write_csv(self, path, t: float = 0.0):
        centers = self.cell_centers()
        names = ["center_x", "center_y", "center_z"][: self.dom.dim]
        with open(path, "w", newline="\n") as fh:
            fh.write("t,cell_index," + ",".join(names) + ",rho_plus,rho_minus\n")
            rp = self.rho_plus.ravel()
            rm = self.rho_minus.ravel()
            for i in range(centers.shape[0]):
                cs = ",".join(repr(float(c)) for c in centers[i])
                fh.write(f"{float(t)!r},{i},{cs},{float(rp[i])!r},{float(rm[i])!r}\n")


# ---------------------------------------------------------------------------
# per-species particle store with cell lists and cached rates
# ---------------------------------------------------------------------------


class _SpeciesStore:
    def __init__(self, name, dom, death_rule, weight_channel, cells_per_axis):
        self.name = name
        self.dom = dom
        self.rule = death_rule
        self.weight_channel = weight_channel
        self.ncell = cells_per_axis  # 0 means brute-force scan
        self.n = 0
        cap = 16
        dim = dom.dim
        self.pos = np.zeros((cap, dim))
        self.n_add = len(death_rule.additive)
        self.add_e = np.zeros((cap, self.n_add))
        self.exp_e = np.zeros(cap)
        self.w_e = np.zeros(cap)
        self.death = np.zeros(cap)
        self.wval = np.ones(cap)
        if self.ncell:
            self.cells = [[] for _ in range(self.ncell**dim)]
            self.cell_of = np.zeros(cap, dtype=np.int64)
            self._offsets = list(product((-1, 0, 1), repeat=dim))
        else:
            self.cells = None

    # -- storage -----------------------------------------------------------

    def _grow(self):
        cap = 2 * self.pos.shape[0]
        dim = self.pos.shape[1]
        for attr, shape in (
            ("pos", (cap, dim)),
            ("add_e", (cap, self.n_add)),
            ("exp_e", (cap,)),
            ("w_e", (cap,)),
            ("death", (cap,)),
            ("wval", (cap,)),
        ):
            new = np.ones(shape) if attr == "wval" else np.zeros(shape)
            new[: self.n] = getattr(self, attr)[: self.n]
            setattr(self, attr, new)
        if self.ncell:
            new_cells = np.zeros(cap, dtype=np.int64)
            new_cells[: self.n] = self.cell_of[: self.n]
            self.cell_of = new_cells

    def _flat_cell(self, x) -> int:
        h = self.dom.side / self.ncell
        flat = 0
        for a in range(self.dom.dim):
            c = int(x[a] / h)
            if c >= self.ncell:  # x == side after float roundoff
                c = self.ncell - 1
            flat = flat * self.ncell + c
        return flat

    def _neighbor_cells(self, x) -> list:
        h = self.dom.side / self.ncell
        base = [int(min(x[a] / h, self.ncell - 1)) for a in range(self.dom.dim)]
        ids = []
        for off in self._offsets:
            flat = 0
            for a in range(self.dom.dim):
                flat = flat * self.ncell + (base[a] + off[a]) % self.ncell
            ids.append(flat)
        return ids

    def append(self, x) -> int:
        if self.n == self.pos.shape[0]:
            self._grow()
        i = self.n
        self.pos[i] = x
        self.add_e[i] = 0.0
        self.exp_e[i] = 0.0
        self.w_e[i] = 0.0
        self.wval[i] = 1.0
        if self.ncell:
            c = self._flat_cell(x)
            self.cell_of[i] = c
            self.cells[c].append(i)
        self.n += 1
        return i

    def discard(self, i):
        last = self.n - 1
        if self.ncell:
            self.cells[self.cell_of[i]].remove(i)
        if i != last:
            self.pos[i] = self.pos[last]
            self.add_e[i] = self.add_e[last]
            self.exp_e[i] = self.exp_e[last]
            self.w_e[i] = self.w_e[last]
            self.death[i] = self.death[last]
            self.wval[i] = self.wval[last]
            if self.ncell:
                c = self.cell_of[last]
                self.cell_of[i] = c
                lst = self.cells[c]
                lst[lst.index(last)] = i
        self.n = last

    # -- queries -----------------------------------------------------------

    def query(self, x, radius):
        """Indices and distances of particles within ``radius`` of ``x``."""
        if self.n == 0:
            return _EMPTY_IDX, _EMPTY_VAL
        if self.ncell:
            cand: list = []
            for c in self._neighbor_cells(x):
                cand += self.cells[c]
            if not cand:
                return _EMPTY_IDX, _EMPTY_VAL
            idx = np.array(cand, dtype=np.int64)
        else:
            idx = np.arange(self.n)
        delta = np.abs(self.pos[idx] - x)
        delta = np.minimum(delta, self.dom.side - delta)
        d = np.sqrt(np.sum(delta * delta, axis=1))
        mask = d <= radius
        return idx[mask], d[mask]

    # -- cached values -----------------------------------------------------

    def refresh_death(self, idx):
        rule = self.rule
        vals = np.full(np.shape(idx), rule.base, dtype=float)
        if self.n_add:
            vals = vals + self.add_e[idx].sum(axis=-1)
        if rule.exponential is not None:
            vals = vals * np.exp(rule.exponential.coefficient * self.exp_e[idx])
        self.death[idx] = vals

    def refresh_weight(self, idx):
        self.wval[idx] = np.exp(self.weight_channel.coefficient * self.w_e[idx])

    def death_total(self) -> float:
        return float(np.sum(self.death[: self.n]))

    def weight_total(self) -> float:
        if self.weight_channel is None:
            return float(self.n)
        return float(np.sum(self.wval[: self.n]))


_EMPTY_IDX = np.zeros(0, dtype=np.int64)
_EMPTY_VAL = np.zeros(0)


class SimulationState:
    """Mutable state of one replica: configuration, clocks and rate caches."""

    def __init__(self, model, dom: TorusDomain, init: TwoSpeciesConfiguration,
                 explosion_cap: int = 1_000_000):
        self.model = model
        self.dom = dom
        self.time = 0.0
        self.events = 0
        self.rejected = 0
        self.explosion_cap = explosion_cap
        self._pending = None
        table = rate_table(model)
        self.table = table

        cutoffs = []
        for sp in ("plus", "minus"):
            rule = table.death[sp]
            for ch in rule.additive:
                cutoffs.append(ch.kernel.cutoff)
            if rule.exponential is not None:
                cutoffs.append(rule.exponential.kernel.cutoff)
            for ch in table.birth[sp].suppression:
                cutoffs.append(ch.kernel.cutoff)
            for pc in table.birth[sp].parents:
                if pc.weight is not None:
                    cutoffs.append(pc.weight.kernel.cutoff)
        max_cut = max(cutoffs, default=0.0)
        if max_cut > dom.side / 2.0 + 1e-12:
            raise ValueError("kernel cutoff exceeds half the domain side")
        ncell = int(dom.side / max_cut) if max_cut > 0.0 else 0
        ncell = min(ncell, {1: 256, 2: 64, 3: 16}[dom.dim])
        if ncell < 4:
            ncell = 0  # brute-force neighbor scan

        weight_channels = {"plus": None, "minus": None}
        for sp in ("plus", "minus"):
            for pc in table.birth[sp].parents:
                if pc.weight is not None:
                    if weight_channels[pc.source] is not None:
                        raise ValueError("multiple weight channels per species")
                    weight_channels[pc.source] = pc.weight

        self.stores = {
            sp: _SpeciesStore(sp, dom, table.death[sp], weight_channels[sp], ncell)
            for sp in ("plus", "minus")
        }

        # updates_from[src] = (target store, slot kind, slot index, kernel)
        self.updates_from = {"plus": [], "minus": []}
        for sp in ("plus", "minus"):
            store = self.stores[sp]
            for j, ch in enumerate(store.rule.additive):
                self.updates_from[ch.source].append((store, "add", j, ch.kernel))
            if store.rule.exponential is not None:
                ch = store.rule.exponential
                self.updates_from[ch.source].append((store, "exp", 0, ch.kernel))
            if store.weight_channel is not None:
                ch = store.weight_channel
                self.updates_from[ch.source].append((store, "weight", 0, ch.kernel))

        self._parent_masses = {
            sp: [kernel_mass(pc.kernel, dom.dim) for pc in table.birth[sp].parents]
            for sp in ("plus", "minus")
        }

        if init.dim != dom.dim and init.size() > 0:
            raise ValueError("initial configuration dimension does not match domain")
        for pts in (init.plus, init.minus):
            if pts.size and (np.any(pts < 0.0) or np.any(pts >= dom.side)):
                raise ValueError("initial coordinates must lie in [0, side)")
        for sp in ("minus", "plus"):
            store = self.stores[sp]
            for x in init.species(sp):
                store.append(x)
        self._recompute_all()

    # -- cache construction / coherence ------------------------------------

    def _fresh_energies(self, store: _SpeciesStore):
        """Energy columns recomputed from scratch (full pair scan)."""
        n = store.n
        add = np.zeros((n, store.n_add))
        exp_e = np.zeros(n)
        w_e = np.zeros(n)

        def pair_sums(src_name, kern):
            src = self.stores[src_name]
            if n == 0 or src.n == 0 or kern.is_zero:
                return np.zeros(n)
            delta = np.abs(store.pos[:n, None, :] - src.pos[None, : src.n, :])
            delta = np.minimum(delta, self.dom.side - delta)
            d = np.sqrt(np.sum(delta * delta, axis=2))
            vals = kern.profile(d)
            if src is store:
                np.fill_diagonal(vals, 0.0)
            return vals.sum(axis=1)

        for j, ch in enumerate(store.rule.additive):
            add[:, j] = pair_sums(ch.source, ch.kernel)
        if store.rule.exponential is not None:
            ch = store.rule.exponential
            exp_e = pair_sums(ch.source, ch.kernel)
        if store.weight_channel is not None:
            ch = store.weight_channel
            w_e = pair_sums(ch.source, ch.kernel)
        return add, exp_e, w_e

    def _recompute_all(self):
        for store in self.stores.values():
            n = store.n
            add, exp_e, w_e = self._fresh_energies(store)
            store.add_e[:n] = add
            store.exp_e[:n] = exp_e
            store.w_e[:n] = w_e
            idx = np.arange(n)
            store.refresh_death(idx)
            if store.weight_channel is not None:
                store.refresh_weight(idx)

    def cache_drift(self) -> float:
        """Largest relative gap between cached rates and a fresh recompute."""
        worst = 0.0
        for store in self.stores.values():
            n = store.n
            if n == 0:
                continue
            add, exp_e, w_e = self._fresh_energies(store)
            rule = store.rule
            fresh = np.full(n, rule.base)
            if store.n_add:
                fresh = fresh + add.sum(axis=1)
            if rule.exponential is not None:
                fresh = fresh * np.exp(rule.exponential.coefficient * exp_e)
            scale = max(1.0, float(np.max(np.abs(fresh))))
            worst = max(worst, float(np.max(np.abs(fresh - store.death[:n]))) / scale)
            if store.weight_channel is not None:
                wfresh = np.exp(store.weight_channel.coefficient * w_e)
                worst = max(worst, float(np.max(np.abs(wfresh - store.wval[:n]))))
        return worst

    # -- incremental updates -------------------------------------------------

    def _apply_field_updates(self, src_name, x, sign):
        for store, kind, j, kern in self.updates_from[src_name]:
            idx, dist = store.query(x, kern.cutoff)
            if idx.size == 0:
                continue
            vals = sign * kern.profile(dist)
            if kind == "add":
                store.add_e[idx, j] += vals
                store.refresh_death(idx)
            elif kind == "exp":
                store.exp_e[idx] += vals
                store.refresh_death(idx)
            else:
                store.w_e[idx] += vals
                store.refresh_weight(idx)

    def insert(self, sp: str, x: np.ndarray):
        store = self.stores[sp]
        # energies of the newcomer first (grids do not yet contain it)
        add = np.zeros(store.n_add)
        for j, ch in enumerate(store.rule.additive):
            _, dist = self.stores[ch.source].query(x, ch.kernel.cutoff)
            add[j] = float(np.sum(ch.kernel.profile(dist)))
        exp_e = 0.0
        if store.rule.exponential is not None:
            ch = store.rule.exponential
            _, dist = self.stores[ch.source].query(x, ch.kernel.cutoff)
            exp_e = float(np.sum(ch.kernel.profile(dist)))
        w_e = 0.0
        if store.weight_channel is not None:
            ch = store.weight_channel
            _, dist = self.stores[ch.source].query(x, ch.kernel.cutoff)
            w_e = float(np.sum(ch.kernel.profile(dist)))
        self._apply_field_updates(sp, x, +1.0)
        i = store.append(x)
        store.add_e[i] = add
        store.exp_e[i] = exp_e
        store.w_e[i] = w_e
        store.refresh_death(i)
        if store.weight_channel is not None:
            store.refresh_weight(i)
        if self.size() > self.explosion_cap:
            raise ExplosionError(
                f"particle count {self.size()} exceeded cap {self.explosion_cap} "
                f"at time {self.time:.6g}"
            )

    def remove(self, sp: str, i: int):
        store = self.stores[sp]
        x = store.pos[i].copy()
        store.discard(i)
        self._apply_field_updates(sp, x, -1.0)

    # -- rates ---------------------------------------------------------------

    def birth_bound(self, sp: str):
        """(total bound, activity part, per-parent-channel parts)"""
        rule = self.table.birth[sp]
        activity = rule.activity * self.dom.volume
        parts = []
        for pc, mass in zip(rule.parents, self._parent_masses[sp]):
            src = self.stores[pc.source]
            total_w = src.n if pc.weight is None else float(np.sum(src.wval[: src.n]))
            parts.append(total_w * mass)
        return activity + sum(parts), activity, parts

    def rate_parts(self):
        d_minus = self.stores["minus"].death_total()
        d_plus = self.stores["plus"].death_total()
        b_minus = self.birth_bound("minus")[0]
        b_plus = self.birth_bound("plus")[0]
        return d_minus, d_plus, b_minus, b_plus

    def total_event_rate(self) -> float:
        return float(sum(self.rate_parts()))

    def size(self) -> int:
        return self.stores["plus"].n + self.stores["minus"].n

    def counts(self):
        return self.stores["plus"].n, self.stores["minus"].n

    def configuration(self) -> TwoSpeciesConfiguration:
        return TwoSpeciesConfiguration(
            self.stores["plus"].pos[: self.stores["plus"].n].copy(),
            self.stores["minus"].pos[: self.stores["minus"].n].copy(),
        )

    # -- one event -----------------------------------------------------------

    def _attempt_birth(self, sp: str, v: float, rng: np.random.Generator) -> bool:
        rule = self.table.birth[sp]
        _, activity, parts = self.birth_bound(sp)
        if v < activity:
            x = self.dom.uniform_point(rng)
            accept = 1.0
            for ch in rule.suppression:
                _, dist = self.stores[ch.source].query(x, ch.kernel.cutoff)
                accept *= math.exp(
                    ch.coefficient * float(np.sum(ch.kernel.profile(dist)))
                )
            if accept >= 1.0 or rng.random() < accept:
                self.insert(sp, x)
                return True
            return False
        v -= activity
        for pc, bound, mass in zip(rule.parents, parts, self._parent_masses[sp]):
            if v >= bound:
                v -= bound
                continue
            src = self.stores[pc.source]
            if pc.weight is None:
                idx = min(int(v / mass), src.n - 1)
            else:
                cum = np.cumsum(src.wval[: src.n]) * mass
                idx = min(int(np.searchsorted(cum, v, side="right")), src.n - 1)
            y = src.pos[idx]
            off = _sample_kernel_offset(pc.kernel, self.dom.dim, rng)
            self.insert(sp, self.dom.wrap(y + off))
            return True
        # unreachable up to float roundoff at the channel boundary
        return False

    def step(self, rng: np.random.Generator, t_end: float):
        """Advance to the next event attempt.

        Returns the event time, or None when the next event falls beyond
        ``t_end`` (or no rate remains); ``self.time`` is then left for the
        caller to finalize.
        """
        d_minus, d_plus, b_minus, b_plus = self.rate_parts()
        total = d_minus + d_plus + b_minus + b_plus
        if total <= 0.0:
            return None
        t_new = self.time + rng.exponential() / total
        if t_new > t_end:
            return None
        u = rng.uniform(0.0, total)
        if u < d_minus:
            store = self.stores["minus"]
            cum = np.cumsum(store.death[: store.n])
            i = min(int(np.searchsorted(cum, u, side="right")), store.n - 1)
            self._pending = ("death", "minus", i)
        elif u < d_minus + d_plus:
            v = u - d_minus
            store = self.stores["plus"]
            cum = np.cumsum(store.death[: store.n])
            i = min(int(np.searchsorted(cum, v, side="right")), store.n - 1)
            self._pending = ("death", "plus", i)
        elif u < d_minus + d_plus + b_minus:
            self._pending = ("birth", "minus", u - d_minus - d_plus)
        else:
            self._pending = ("birth", "plus", u - d_minus - d_plus - b_minus)
        return t_new

    def apply_pending(self, rng: np.random.Generator):
        kind, sp, payload = self._pending
        if kind == "death":
            self.remove(sp, payload)
        else:
            if not self._attempt_birth(sp, payload, rng):
                self.rejected += 1
        self.events += 1


def total_event_rate(m, state: SimulationState, dom: TorusDomain) -> float:
    """Total jump rate (deaths exact, births through their bounds)."""
    if state.dom != dom:
        raise ValueError("state was built for a different domain")
    return state.total_event_rate()


def init_poisson(
    dom: TorusDomain,
    intensity_plus: float,
    intensity_minus: float,
    rng: np.random.Generator,
) -> TwoSpeciesConfiguration:
    """Independent homogeneous Poisson configurations for the two species.

    Counts are Poisson(intensity × volume), positions i.i.d. uniform; exact
    duplicate positions (probability zero, but possible with float draws)
    are redrawn.
    """
    if intensity_plus < 0.0 or intensity_minus < 0.0:
        raise ValueError("intensities must be non-negative")
    n_plus = int(rng.poisson(intensity_plus * dom.volume))
    n_minus = int(rng.poisson(intensity_minus * dom.volume))
    pts = rng.uniform(0.0, dom.side, size=(n_plus + n_minus, dom.dim))
    pts = _redraw_duplicates(pts, dom, rng)
    return TwoSpeciesConfiguration(pts[:n_plus], pts[n_plus:])


def init_poisson_piecewise(
    dom: TorusDomain,
    field_plus: np.ndarray,
    field_minus: np.ndarray,
    rng: np.random.Generator,
) -> TwoSpeciesConfiguration:
    """Poisson configurations with piecewise-constant intensity per grid cell."""
    field_plus = np.asarray(field_plus, dtype=float)
    field_minus = np.asarray(field_minus, dtype=float)
    if field_plus.shape != field_minus.shape:
        raise ValueError("species intensity grids must share a shape")
    if field_plus.ndim != dom.dim:
        raise ValueError("intensity grid rank must equal the domain dimension")
    m = field_plus.shape[0]
    if any(s != m for s in field_plus.shape):
        raise ValueError("intensity grid must have equal cells per axis")
    h = dom.side / m
    cellvol = h**dom.dim

    def draw(fieldvals):
        counts = rng.poisson(np.clip(fieldvals, 0.0, None) * cellvol)
        pts = []
        for cell_idx, c in np.ndenumerate(counts):
            if c == 0:
                continue
            lo = np.array(cell_idx, dtype=float) * h
            pts.append(lo + h * rng.uniform(size=(c, dom.dim)))
        if not pts:
            return np.zeros((0, dom.dim))
        return np.vstack(pts)

    plus = draw(field_plus)
    minus = draw(field_minus)
    pts = _redraw_duplicates(np.vstack([plus, minus]), dom, rng)
    return TwoSpeciesConfiguration(pts[: plus.shape[0]], pts[plus.shape[0] :])


def _redraw_duplicates(pts, dom, rng):
    while pts.shape[0] > 1:
        _, counts = np.unique(pts, axis=0, return_counts=True)
        if np.all(counts == 1):
            break
        keep = np.ones(pts.shape[0], dtype=bool)
        seen = set()
        for i in range(pts.shape[0]):
            key = pts[i].tobytes()
            if key in seen:
                keep[i] = False
            else:
                seen.add(key)
        redraw = np.where(~keep)[0]
        pts[redraw] = rng.uniform(0.0, dom.side, size=(redraw.size, dom.dim))
    return pts


def simulate(
    m,
    dom: TorusDomain,
    init: TwoSpeciesConfiguration,
    t_end: float,
    observer_times: Sequence[float],
    rng: np.random.Generator,
    record_configs: bool = False,
    explosion_cap: int = 1_000_000,
    resync_interval: int = 10_000,
) -> Trajectory:
    """Run the jump process to ``t_end`` recording at the observer times.

    Observation is piecewise-constant: each observer time receives the state
    after the last jump at or before it.  Observer times must be strictly
    increasing and at most ``t_end``.
    """
    if not (t_end > 0.0 and math.isfinite(t_end)):
        raise ValueError("t_end must be positive and finite")
    obs = [float(t) for t in observer_times]
    if any(b <= a for a, b in zip(obs, obs[1:])):
        raise ValueError("observer times must be strictly increasing")
    if obs and (obs[0] < 0.0 or obs[-1] > t_end):
        raise ValueError("observer times must lie in [0, t_end]")

    state = SimulationState(m, dom, init, explosion_cap=explosion_cap)
    times, nps, nms = [], [], []
    configs: Optional[list] = [] if record_configs else None

    def record(t):
        times.append(t)
        p, mn = state.counts()
        nps.append(p)
        nms.append(mn)
        if configs is not None:
            configs.append(state.configuration())

    obs_i = 0
    while True:
        t_new = state.step(rng, t_end)
        if t_new is None:
            break
        while obs_i < len(obs) and obs[obs_i] < t_new:
            record(obs[obs_i])
            obs_i += 1
        state.time = t_new
        state.apply_pending(rng)
        if resync_interval and state.events % resync_interval == 0:
            state._recompute_all()
    while obs_i < len(obs):
        record(obs[obs_i])
        obs_i += 1
    state.time = t_end
    return Trajectory(
        times=np.array(times),
        n_plus=np.array(nps, dtype=np.int64),
        n_minus=np.array(nms, dtype=np.int64),
        configs=configs,
        events=state.events,
    )


# ---------------------------------------------------------------------------
# empirical estimators
# ---------------------------------------------------------------------------


def estimate_density_field(
    snapshots: Sequence[TwoSpeciesConfiguration],
    cells_per_axis: int,
    dom: TorusDomain,
) -> DensityField:
    """Snapshot-averaged per-cell number densities for both species."""
    if cells_per_axis < 1:
        raise ValueError("cells_per_axis must be at least 1")
    m = cells_per_axis
    h = dom.side / m
    shape = (m,) * dom.dim
    hists = {sp: np.zeros(shape) for sp in ("plus", "minus")}
    for cfg in snapshots:
        for sp in ("plus", "minus"):
            pts = cfg.species(sp)
            if pts.shape[0] == 0:
                continue
            idx = np.minimum((pts / h).astype(np.int64), m - 1)
            np.add.at(hists[sp], tuple(idx.T), 1.0)
    norm = max(len(snapshots), 1) * h**dom.dim
    return DensityField(
        dom=dom,
        cells_per_axis=m,
        rho_plus=hists["plus"] / norm,
        rho_minus=hists["minus"] / norm,
    )


def estimate_pair_correlation(
    snapshots: Sequence[TwoSpeciesConfiguration],
    pair: tuple,
    bin_edges: Sequence[float],
    dom: TorusDomain,
):
    """Radially averaged two-point correlation estimator.

    Counts ordered pairs (first species of ``pair``, second species) per
    radial shell, normalized by snapshots × volume × shell volume, so a
    homogeneous Poisson pattern estimates the product of its densities.
    Same-species self pairs are excluded.

    Returns an array of bin midpoints and the estimates.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0.0):
        raise ValueError("bin_edges must be increasing with at least two entries")
    if edges[-1] > dom.side / 2.0 + 1e-12:
        raise ValueError("bin edges must not exceed half the domain side")
    sp_a, sp_b = pair
    counts = np.zeros(edges.size - 1)
    for cfg in snapshots:
        a = cfg.species(sp_a)
        b = cfg.species(sp_b)
        if a.shape[0] == 0 or b.shape[0] == 0:
            continue
        delta = np.abs(a[:, None, :] - b[None, :, :])
        delta = np.minimum(delta, dom.side - delta)
        d = np.sqrt(np.sum(delta * delta, axis=2))
        if sp_a == sp_b:
            np.fill_diagonal(d, np.inf)
        counts += np.histogram(d.ravel(), bins=edges)[0]
    shells = _BALL_VOLUME[dom.dim] * (edges[1:] ** dom.dim - edges[:-1] ** dom.dim)
    norm = max(len(snapshots), 1) * dom.volume * shells
    mids = 0.5 * (edges[1:] + edges[:-1])
    return mids, counts / norm
