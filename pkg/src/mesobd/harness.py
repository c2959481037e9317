"""Experiment orchestration: config parsing, run modes and the scaling sweep.

A single JSON document describes an experiment; every field is explicit and
unknown fields are rejected, so the config echoed into the output directory
is the complete record of a run.  Replica randomness comes from
``SeedSequence(seed, spawn_key=(row_index, replica_index))`` (row index =
position in the ascending-sorted scaling list; single runs use row 0), so
any alternate implementation can reproduce the streams.

The sweep realizes the scaling-limit experiment: simulate the level-n model
from level-n initial intensities, divide the empirical density by n, and
compare with the integrated kinetic system of the *unscaled* model in
relative L2 at the final time, with a replica-bootstrap standard error.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .geometry import Kernel, TorusDomain
from .kinetic import KineticState, integrate
from .models import (
    BdlpInGlauber,
    BdlpPair,
    DensityBranching,
    GlauberPair,
    apply_vlasov_scaling,
    validate_conditions,
)
from .simulate import (
    DensityField,
    ExplosionError,
    estimate_density_field,
    init_poisson,
    init_poisson_piecewise,
    simulate,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "SweepRow",
    "ConvergenceTable",
    "parse_config",
    "config_to_dict",
    "load_config",
    "run_single",
    "run_scaling_sweep",
    "replica_rng",
]

logger = logging.getLogger("mesobd")

MODES = ("simulate", "kinetic", "sweep", "validate")
FORMATS = ("csv", "json")

_MODEL_CLASSES = {
    "bdlp_pair": BdlpPair,
    "glauber_pair": GlauberPair,
    "bdlp_in_glauber": BdlpInGlauber,
    "density_branching": DensityBranching,
}
_KERNEL_FIELDS = {
    name: [
        f.name
        for f in dataclasses.fields(cls)
        if f.type in ("Kernel", Kernel)
    ]
    for name, cls in _MODEL_CLASSES.items()
}


class ConfigError(ValueError):
    """Malformed experiment configuration; the message names the field."""


@dataclass
class ExperimentConfig:
    domain: TorusDomain
    model: object
    mode: str
    initial_density_plus: Union[float, list]
    initial_density_minus: Union[float, list]
    t_end: float
    dt: float
    grid_cells: int
    scaling_levels: list
    replicas: int
    seed: int
    output_dir: str
    output_format: str
    alpha: float = 0.0
    beta: float = 0.0


# ---------------------------------------------------------------------------
# (de)serialization
# ---------------------------------------------------------------------------


def _kernel_from_dict(obj, where: str) -> Kernel:
    if not isinstance(obj, dict) or "shape" not in obj:
        raise ConfigError(f"{where}: kernel record must be an object with 'shape'")
    shape = obj["shape"]
    try:
        if shape == "zero":
            extra = set(obj) - {"shape"}
            if extra:
                raise ConfigError(f"{where}: unknown kernel fields {sorted(extra)}")
            return Kernel.zero()
        if shape == "tophat":
            extra = set(obj) - {"shape", "amplitude", "radius"}
            if extra:
                raise ConfigError(f"{where}: unknown kernel fields {sorted(extra)}")
            return Kernel.tophat(float(obj["amplitude"]), float(obj["radius"]))
        if shape == "truncated_gaussian":
            extra = set(obj) - {"shape", "amplitude", "width", "cutoff"}
            if extra:
                raise ConfigError(f"{where}: unknown kernel fields {sorted(extra)}")
            return Kernel.truncated_gaussian(
                float(obj["amplitude"]), float(obj["width"]), float(obj["cutoff"])
            )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: unknown kernel shape {shape!r}")


def _kernel_to_dict(k: Kernel) -> dict:
    if k.shape == "zero":
        return {"shape": "zero"}
    if k.shape == "tophat":
        return {"shape": "tophat", "amplitude": k.amplitude, "radius": k.cutoff}
    return {
        "shape": "truncated_gaussian",
        "amplitude": k.amplitude,
        "width": k.width,
        "cutoff": k.cutoff,
    }


def model_from_dict(obj) -> object:
    if not isinstance(obj, dict) or "variant" not in obj:
        raise ConfigError("model: record must be an object with a 'variant' tag")
    variant = obj["variant"]
    cls = _MODEL_CLASSES.get(variant)
    if cls is None:
        raise ConfigError(f"model.variant: unknown variant {variant!r}")
    names = {f.name for f in dataclasses.fields(cls)}
    given = set(obj) - {"variant"}
    unknown = given - names
    if unknown:
        raise ConfigError(f"model: unknown fields {sorted(unknown)}")
    missing = names - given
    if missing:
        raise ConfigError(f"model: missing fields {sorted(missing)}")
    kwargs = {}
    for name in names:
        if name in _KERNEL_FIELDS[variant]:
            kwargs[name] = _kernel_from_dict(obj[name], f"model.{name}")
        else:
            try:
                kwargs[name] = float(obj[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"model.{name}: {exc}") from exc
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc


def model_to_dict(model) -> dict:
    for variant, cls in _MODEL_CLASSES.items():
        if isinstance(model, cls):
            out = {"variant": variant}
            for f in dataclasses.fields(cls):
                v = getattr(model, f.name)
                out[f.name] = _kernel_to_dict(v) if isinstance(v, Kernel) else v
            return out
    raise TypeError(f"cannot serialize model of type {type(model).__name__}")


_CONFIG_FIELDS = {
    "domain",
    "model",
    "mode",
    "initial_density_plus",
    "initial_density_minus",
    "t_end",
    "dt",
    "grid_cells",
    "scaling_levels",
    "replicas",
    "seed",
    "output_dir",
    "output_format",
    "alpha",
    "beta",
}


def parse_config(obj: dict) -> ExperimentConfig:
    """Validate a raw JSON object into an ExperimentConfig."""
    if not isinstance(obj, dict):
        raise ConfigError("config: top level must be an object")
    unknown = set(obj) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"config: unknown fields {sorted(unknown)}")
    missing = _CONFIG_FIELDS - set(obj)
    if missing:
        raise ConfigError(f"config: missing fields {sorted(missing)}")

    dom_obj = obj["domain"]
    if not isinstance(dom_obj, dict) or set(dom_obj) != {"dim", "side_length"}:
        raise ConfigError("domain: must be {'dim': ..., 'side_length': ...}")
    try:
        dom = TorusDomain(int(dom_obj["dim"]), float(dom_obj["side_length"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"domain: {exc}") from exc

    model = model_from_dict(obj["model"])
    for f in dataclasses.fields(type(model)):
        v = getattr(model, f.name)
        if isinstance(v, Kernel) and v.cutoff > dom.side / 2.0 + 1e-12:
            raise ConfigError(
                f"model.{f.name}: kernel cutoff {v.cutoff} exceeds half the "
                f"domain side {dom.side / 2.0}"
            )

    mode = obj["mode"]
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {MODES}, got {mode!r}")
    fmt = obj["output_format"]
    if fmt not in FORMATS:
        raise ConfigError(f"output_format: must be one of {FORMATS}, got {fmt!r}")

    def positive_number(name, allow_zero=False):
        try:
            v = float(obj[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        if not math.isfinite(v) or v < 0.0 or (v == 0.0 and not allow_zero):
            raise ConfigError(f"{name}: must be positive, got {v}")
        return v

    t_end = positive_number("t_end")
    dt = positive_number("dt")

    grid_cells = obj["grid_cells"]
    if not isinstance(grid_cells, int) or grid_cells < 1:
        raise ConfigError(f"grid_cells: must be an integer >= 1, got {grid_cells!r}")

    levels = obj["scaling_levels"]
    if (
        not isinstance(levels, list)
        or not levels
        or any((not isinstance(n, int)) or n < 1 for n in levels)
    ):
        raise ConfigError("scaling_levels: must be a non-empty list of integers >= 1")

    replicas = obj["replicas"]
    if not isinstance(replicas, int) or replicas < 1:
        raise ConfigError(f"replicas: must be an integer >= 1, got {replicas!r}")

    seed = obj["seed"]
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"seed: must be a non-negative integer, got {seed!r}")

    def density(name):
        v = obj[name]
        if isinstance(v, (int, float)):
            if v < 0:
                raise ConfigError(f"{name}: must be non-negative")
            return float(v)
        if isinstance(v, list):
            if dom.dim != 1:
                raise ConfigError(f"{name}: per-cell profiles require dim = 1")
            if len(v) != grid_cells:
                raise ConfigError(
                    f"{name}: profile length {len(v)} != grid_cells {grid_cells}"
                )
            vals = [float(x) for x in v]
            if any(x < 0 for x in vals):
                raise ConfigError(f"{name}: must be non-negative")
            return vals
        raise ConfigError(f"{name}: must be a number or a per-cell list")

    rho_p = density("initial_density_plus")
    rho_m = density("initial_density_minus")

    for name in ("alpha", "beta"):
        try:
            v = float(obj[name])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{name}: {exc}") from exc
        if not math.isfinite(v):
            raise ConfigError(f"{name}: must be finite")

    if not isinstance(obj["output_dir"], str) or not obj["output_dir"]:
        raise ConfigError("output_dir: must be a non-empty string")

    return ExperimentConfig(
        domain=dom,
        model=model,
        mode=mode,
        initial_density_plus=rho_p,
        initial_density_minus=rho_m,
        t_end=t_end,
        dt=dt,
        grid_cells=grid_cells,
        scaling_levels=list(levels),
        replicas=replicas,
        seed=seed,
        output_dir=obj["output_dir"],
        output_format=fmt,
        alpha=float(obj["alpha"]),
        beta=float(obj["beta"]),
    )


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return {
        "domain": {"dim": cfg.domain.dim, "side_length": cfg.domain.side},
        "model": model_to_dict(cfg.model),
        "mode": cfg.mode,
        "initial_density_plus": cfg.initial_density_plus,
        "initial_density_minus": cfg.initial_density_minus,
        "t_end": cfg.t_end,
        "dt": cfg.dt,
        "grid_cells": cfg.grid_cells,
        "scaling_levels": cfg.scaling_levels,
        "replicas": cfg.replicas,
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "output_format": cfg.output_format,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
    }


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON in {path}: {exc}") from exc
    return parse_config(obj)


# ---------------------------------------------------------------------------
# seeds and small helpers
# ---------------------------------------------------------------------------


def replica_rng(seed: int, row_index: int, replica: int) -> np.random.Generator:
    """The documented stream for one replica of one sweep row."""
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(row_index, replica))
    return np.random.Generator(np.random.PCG64(seq))


def _initial_fields(cfg: ExperimentConfig):
    shape = (cfg.grid_cells,) * cfg.domain.dim

    def expand(v):
        if isinstance(v, list):
            return np.asarray(v, dtype=float)
        return np.full(shape, float(v))

    return expand(cfg.initial_density_plus), expand(cfg.initial_density_minus)


def _draw_initial(cfg: ExperimentConfig, factor: float, rng):
    """Poisson initial configuration at ``factor`` times the base intensity."""
    if isinstance(cfg.initial_density_plus, list) or isinstance(
        cfg.initial_density_minus, list
    ):
        fp, fm = _initial_fields(cfg)
        return init_poisson_piecewise(cfg.domain, factor * fp, factor * fm, rng)
    return init_poisson(
        cfg.domain,
        factor * float(cfg.initial_density_plus),
        factor * float(cfg.initial_density_minus),
        rng,
    )


def _write_table(path: Path, header: list, rows: list, fmt: str):
    """Emit one tabular artifact as CSV or as a JSON list of row objects."""
    if fmt == "csv":
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(
                    ",".join(
                        str(v) if isinstance(v, int) else repr(float(v)) for v in row
                    )
                    + "\n"
                )
    else:
        obj = [dict(zip(header, row)) for row in rows]
        with open(path, "w", newline="\n") as fh:
            json.dump(obj, fh, indent=1)
            fh.write("\n")


def _density_rows(field, t: float):
    centers = field.cell_centers()
    rp = field.rho_plus.ravel()
    rm = field.rho_minus.ravel()
    rows = []
    for i in range(centers.shape[0]):
        rows.append(
            [t, i] + [float(c) for c in centers[i]] + [float(rp[i]), float(rm[i])]
        )
    return rows


def _density_header(dim: int):
    return ["t", "cell_index"] + ["center_x", "center_y", "center_z"][:dim] + [
        "rho_plus",
        "rho_minus",
    ]


# ---------------------------------------------------------------------------
# run modes
# ---------------------------------------------------------------------------


def _echo_config(cfg: ExperimentConfig, out: Path):
    with open(out / "config.json", "w", newline="\n") as fh:
        json.dump(config_to_dict(cfg), fh, indent=1)
        fh.write("\n")
    return out / "config.json"


def run_single(cfg: ExperimentConfig):
    """Execute a simulate/kinetic/validate config.

    Returns ``(written file paths, exit code)``; the exit code is 2 when a
    validate run fails its conditions, else 0.
    """
    if cfg.mode == "sweep":
        raise ConfigError("mode: run_single expects simulate, kinetic or validate")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [_echo_config(cfg, out)]
    ext = cfg.output_format
    code = 0

    if cfg.mode == "validate":
        report = validate_conditions(cfg.model, cfg.alpha, cfg.beta, dim=cfg.domain.dim)
        path = out / "report.json"
        with open(path, "w", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=1)
            fh.write("\n")
        files.append(path)
        code = 0 if report.passed else 2

    elif cfg.mode == "kinetic":
        fp, fm = _initial_fields(cfg)
        state0 = KineticState(cfg.domain, cfg.grid_cells, fp, fm)
        times = [cfg.t_end * k / 100.0 for k in range(101)]
        result = integrate(cfg.model, state0, cfg.t_end, cfg.dt, output_times=times)
        rows = []
        for st in result.states:
            field = DensityField(
                dom=st.dom,
                cells_per_axis=st.cells_per_axis,
                rho_plus=st.rho_plus,
                rho_minus=st.rho_minus,
            )
            rows.extend(_density_rows(field, st.time))
        path = out / f"series.{ext}"
        _write_table(path, _density_header(cfg.domain.dim), rows, cfg.output_format)
        files.append(path)
        if result.clipped:
            logger.warning("kinetic run clipped %d negative cells", result.clipped)

    else:  # simulate
        n_obs = int(math.floor(cfg.t_end / cfg.dt + 1e-9))
        times = [k * cfg.dt for k in range(n_obs + 1)]
        if times[-1] < cfg.t_end - 1e-12:
            times.append(cfg.t_end)
        mean_counts = np.zeros((len(times), 2))
        final_snapshots = []
        for r in range(cfg.replicas):
            rng = replica_rng(cfg.seed, 0, r)
            init = _draw_initial(cfg, 1.0, rng)
            traj = simulate(
                cfg.model, cfg.domain, init, cfg.t_end, times, rng,
                record_configs=True,
            )
            tr_path = out / f"trajectory_r{r:03d}.{ext}"
            _write_table(
                tr_path,
                ["t", "n_plus", "n_minus"],
                [
                    [float(t), int(a), int(b)]
                    for t, a, b in zip(traj.times, traj.n_plus, traj.n_minus)
                ],
                cfg.output_format,
            )
            files.append(tr_path)
            final = traj.configs[-1]
            final_snapshots.append(final)
            dfield = estimate_density_field([final], cfg.grid_cells, cfg.domain)
            d_path = out / f"density_r{r:03d}.{ext}"
            _write_table(
                d_path,
                _density_header(cfg.domain.dim),
                _density_rows(dfield, cfg.t_end),
                cfg.output_format,
            )
            files.append(d_path)
            mean_counts[:, 0] += traj.n_plus
            mean_counts[:, 1] += traj.n_minus
        mean_counts /= cfg.replicas
        path = out / f"trajectory_mean.{ext}"
        _write_table(
            path,
            ["t", "n_plus", "n_minus"],
            [[float(t), float(a), float(b)] for t, (a, b) in zip(times, mean_counts)],
            cfg.output_format,
        )
        files.append(path)
        dmean = estimate_density_field(final_snapshots, cfg.grid_cells, cfg.domain)
        path = out / f"density_mean.{ext}"
        _write_table(
            path,
            _density_header(cfg.domain.dim),
            _density_rows(dmean, cfg.t_end),
            cfg.output_format,
        )
        files.append(path)

    return files, code


# ---------------------------------------------------------------------------
# scaling sweep
# ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    n: int
    replicas: int
    t_eval: float
    err_minus: float
    err_plus: float
    se_minus: float
    se_plus: float
    wall_s: float


@dataclass
class ConvergenceTable:
    rows: list

    HEADER = ["n", "replicas", "t_eval", "err_minus", "err_plus",
              "se_minus", "se_plus", "wall_s"]

    def as_rows(self):
        return [
            [r.n, r.replicas, float(r.t_eval), float(r.err_minus),
             float(r.err_plus), float(r.se_minus), float(r.se_plus),
             float(r.wall_s)]
            for r in self.rows
        ]

    def write(self, path, fmt: str = "csv"):
        _write_table(Path(path), self.HEADER, self.as_rows(), fmt)


def _relative_l2(emp: np.ndarray, ref: np.ndarray) -> float:
    denom = float(np.sqrt(np.sum(ref * ref)))
    if denom == 0.0:
        return float(np.sqrt(np.sum(emp * emp)))
    return float(np.sqrt(np.sum((emp - ref) ** 2))) / denom


def _sweep_replica(args):
    (model, dom, n, t_end, grid_cells, seed, row_index, r,
     rho_plus, rho_minus, profile) = args
    rng = replica_rng(seed, row_index, r)
    scaled = apply_vlasov_scaling(model, n)
    if profile is not None:
        init = init_poisson_piecewise(
            dom, n * profile[0], n * profile[1], rng
        )
    else:
        init = init_poisson(dom, n * rho_plus, n * rho_minus, rng)
    traj = simulate(scaled, dom, init, t_end, [t_end], rng, record_configs=True)
    field = estimate_density_field([traj.configs[-1]], grid_cells, dom)
    return field.rho_plus / n, field.rho_minus / n


def run_scaling_sweep(cfg: ExperimentConfig, workers: Optional[int] = None):
    """Run the convergence sweep over ``cfg.scaling_levels``.

    Returns a ConvergenceTable with rows ascending in n.  ``workers`` > 1
    dispatches replicas to a process pool (share-nothing; results are merged
    in replica order, so the output is identical to a serial run).
    """
    if cfg.mode != "sweep":
        raise ConfigError("mode: run_scaling_sweep expects mode 'sweep'")
    dom = cfg.domain
    t_eval = cfg.t_end

    fp, fm = _initial_fields(cfg)
    state0 = KineticState(dom, cfg.grid_cells, fp, fm)
    target = integrate(cfg.model, state0, t_eval, cfg.dt, output_times=[t_eval]).states[-1]

    has_profile = isinstance(cfg.initial_density_plus, list) or isinstance(
        cfg.initial_density_minus, list
    )
    profile = _initial_fields(cfg) if has_profile else None

    rows = []
    levels = sorted(cfg.scaling_levels)
    for row_index, n in enumerate(levels):
        start = time.perf_counter()
        tasks = [
            (cfg.model, dom, n, t_eval, cfg.grid_cells, cfg.seed, row_index, r,
             float(cfg.initial_density_plus) if not has_profile else 0.0,
             float(cfg.initial_density_minus) if not has_profile else 0.0,
             profile)
            for r in range(cfg.replicas)
        ]
        fields_p, fields_m, aborted = [], [], 0
        if workers and workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_sweep_replica_safe, tasks))
        else:
            results = [_sweep_replica_safe(t) for t in tasks]
        for res in results:
            if res is None:
                aborted += 1
            else:
                fields_p.append(res[0])
                fields_m.append(res[1])
        done = len(fields_p)
        if done == 0:
            raise RuntimeError(f"all replicas aborted at scaling level n={n}")
        if aborted:
            logger.warning("n=%d: %d replica(s) hit the explosion guard", n, aborted)
        fp_arr = np.array(fields_p)
        fm_arr = np.array(fields_m)
        err_p = _relative_l2(fp_arr.mean(axis=0), target.rho_plus)
        err_m = _relative_l2(fm_arr.mean(axis=0), target.rho_minus)
        bs_rng = replica_rng(cfg.seed, row_index, cfg.replicas)
        bs_p, bs_m = [], []
        for _ in range(200):
            idx = bs_rng.integers(0, done, size=done)
            bs_p.append(_relative_l2(fp_arr[idx].mean(axis=0), target.rho_plus))
            bs_m.append(_relative_l2(fm_arr[idx].mean(axis=0), target.rho_minus))
        wall = time.perf_counter() - start
        rows.append(
            SweepRow(
                n=n,
                replicas=done,
                t_eval=t_eval,
                err_minus=err_m,
                err_plus=err_p,
                se_minus=float(np.std(bs_m, ddof=1)),
                se_plus=float(np.std(bs_p, ddof=1)),
                wall_s=wall,
            )
        )
        logger.info(
            "sweep n=%d: err_minus=%.4f err_plus=%.4f (%.1fs)", n, err_m, err_p, wall
        )
    return ConvergenceTable(rows=rows)


def _sweep_replica_safe(args):
    try:
        return _sweep_replica(args)
    except ExplosionError:
        return None


def run_sweep_and_write(cfg: ExperimentConfig, workers: Optional[int] = None):
    """Sweep entry point used by the CLI: runs, writes table + config echo."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = [_echo_config(cfg, out)]
    table = run_scaling_sweep(cfg, workers=workers)
    path = out / f"convergence.{cfg.output_format}"
    table.write(path, cfg.output_format)
    files.append(path)
    return table, files
