"""Single-cell experiments and (hbar, delta) sweeps."""
from __future__ import annotations

import itertools
import logging
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import semiclassics as sc
from ..entanglement import Bipartition, Provenance, PuritySeries, purity_series
from ..fock import SpaceConfig
from ..model import CouplingCase, ModelSpec, OneOneParams, TwoTwoParams, build_1x1, build_2x2, total_h
from ..propagator import PropagationConfig, PropagationError, PropagationStats, TimeGrid, echo_evolve, evolve
from ..states import TruncationError, auto_mode_dim, coherent_product_state
from .analysis import fit_loglog_slope, plateau_stats
from .config import ConfigError, ExperimentConfig

log = logging.getLogger(__name__)

NUMERICAL_ERRORS = (PropagationError, TruncationError, np.linalg.LinAlgError, FloatingPointError,
                    ArithmeticError)


@dataclass(eq=False)
class RunRecord:
    config: dict
    model: str
    hbar: float
    delta: float
    mode_dims: tuple[int, ...]
    semiclassical: PuritySeries
    closed_form: PuritySeries
    quantum: PuritySeries | None = None
    echo: PuritySeries | None = None
    metrics: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return self.semiclassical.times

    @property
    def scaled_times(self) -> np.ndarray:
        return self.times * self.delta if self.delta > 0 else self.times


@dataclass(eq=False)
class CellFailure:
    hbar: float
    delta: float
    kind: str          # "config" or "numerical"
    message: str
    detail: str = ""


def mode_dims_for(cfg: ExperimentConfig, hbar: float) -> tuple[int, ...]:
    if cfg.mode_dims != "auto":
        return tuple(cfg.mode_dims)
    return (auto_mode_dim(cfg.j_star, hbar),) * cfg.n_modes


def build_model(cfg: ExperimentConfig, hbar: float, delta: float) -> ModelSpec:
    space = SpaceConfig(mode_dims_for(cfg, hbar))
    if cfg.model == "one_one":
        p = OneOneParams(cfg.gamma_a, cfg.gamma_b, cfg.delta_offset, hbar, delta)
        return build_1x1(p, space)
    case = CouplingCase.CASE_I if cfg.model == "two_two_case1" else CouplingCase.CASE_II
    p = TwoTwoParams(cfg.gamma_a, cfg.gamma_b, cfg.delta_offset, hbar, delta, case)
    return build_2x2(p, space)


def scaled_grid(cfg: ExperimentConfig) -> np.ndarray:
    """Sample points in units of delta*t."""
    if cfg.spacing == "linear":
        return np.linspace(0.0, cfg.scaled_t_max, cfg.samples)
    return np.concatenate([[0.0], np.geomspace(cfg.scaled_t_min, cfg.scaled_t_max, cfg.samples - 1)])


def time_grid(cfg: ExperimentConfig, delta: float) -> TimeGrid:
    s = scaled_grid(cfg)
    return TimeGrid(s / delta if delta > 0 else s)


@dataclass(frozen=True)
class Prediction:
    hessian: np.ndarray
    u: sc.UMatrix
    t_max: float
    packet: sc.PacketSpec
    vbar: sc.AveragedFn


def semiclassical_chain(model: ModelSpec, cfg: ExperimentConfig) -> Prediction:
    """torus average -> mixed Hessian -> u matrix, at the coherent-packet centre."""
    j_vec = np.full(model.d_A + model.d_B, cfg.j_star)
    vbar = sc.averaged_coupling(model.classical_coupling, cfg.torus_points)
    hess = sc.mixed_hessian(vbar, j_vec, model.d_A, cfg.fd_step)
    packet = sc.PacketSpec.coherent(j_vec, model.d_A)
    u = sc.u_matrix(packet, hess)
    t_max = sc.validity_window(sc.spectral_norm(hess), model.delta, model.hbar)
    return Prediction(hess, u, t_max, packet, vbar)


def propagation_config(cfg: ExperimentConfig) -> PropagationConfig:
    return PropagationConfig(cfg.method, cfg.step_dt, cfg.krylov_dim, cfg.target_error_per_step,
                             cfg.renormalize_each_step)


def run_experiment(cfg: ExperimentConfig, hbar: float, delta: float, quantum: bool = True) -> RunRecord:
    """Run one (hbar, delta) cell: quantum, echo, semiclassical and closed-form channels."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        record = _run(cfg, hbar, delta, quantum)
    record.warnings.extend(f"{w.category.__name__}: {w.message}" for w in caught)
    return record


def _run(cfg: ExperimentConfig, hbar: float, delta: float, quantum: bool) -> RunRecord:
    timing: dict[str, float] = {}
    notes: list[str] = []
    t0 = time.perf_counter()
    model = build_model(cfg, hbar, delta)
    grid = time_grid(cfg, delta)
    times = grid.sample_times
    scaled = times * delta if delta > 0 else times
    timing["build_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    pred = semiclassical_chain(model, cfg)
    meta = {"hbar": hbar, "delta": delta, "model": cfg.model}
    semi = PuritySeries(times, sc.purity_prediction(pred.u, delta, times) * np.ones_like(times),
                        Provenance.SEMICLASSICAL, meta)
    closed = PuritySeries(times, sc.closed_form_purity(cfg.model, cfg.j_star, scaled) * np.ones_like(times),
                          Provenance.CLOSED_FORM, meta)
    timing["semiclassical_s"] = time.perf_counter() - t0
    if times[-1] > pred.t_max:
        msg = (f"grid extends to t={times[-1]:.4g} beyond the validity window "
               f"t_max={pred.t_max:.4g} (delta*t*||v''|| < 1/hbar)")
        warnings.warn(msg)

    q_series = e_series = None
    stats = PropagationStats()
    if quantum:
        part = Bipartition.split(model.space, model.d_A)
        psi0 = coherent_product_state([cfg.j_star] * model.space.n_modes, hbar, model.space)
        t0 = time.perf_counter()
        states = evolve(total_h(model), psi0, grid, propagation_config(cfg), hbar, stats)
        q_series = purity_series(states, times, part, Provenance.QUANTUM_FULL, meta)
        timing["quantum_s"] = time.perf_counter() - t0
        if cfg.echo:
            t0 = time.perf_counter()
            e_states = echo_evolve(model, psi0, grid, propagation_config(cfg))
            e_series = purity_series(e_states, times, part, Provenance.QUANTUM_ECHO, meta)
            timing["echo_s"] = time.perf_counter() - t0

    metrics = _metrics(cfg, pred, delta, times, scaled, semi, q_series, stats if quantum else None)
    notes.extend(cfg.unpublished_choices())
    return RunRecord(cfg.to_dict(), cfg.model, hbar, delta, model.space.mode_dims, semi, closed,
                     q_series, e_series, metrics, timing, notes)


def _metrics(cfg, pred: Prediction, delta, times, scaled, semi, q_series, stats) -> dict:
    m: dict = {
        "u_trace": pred.u.trace,
        "u_rank": pred.u.rank,
        "hessian": pred.hessian.tolist(),
        "validity_t_max": pred.t_max,
        "asymptotic_exponent": sc.asymptotic_exponent(pred.u),
        "slope_semiclassical": fit_loglog_slope(scaled, semi.values, cfg.fit_min, cfg.fit_max),
    }
    t_decay = 1.0 / (delta * np.sqrt(pred.u.trace)) if delta > 0 and pred.u.trace > 0 else float("inf")
    m["t_decay"] = t_decay
    if q_series is not None:
        inside = (times > 0) & (times <= pred.t_max)
        if np.any(inside):
            rel = np.abs(q_series.values[inside] - semi.values[inside]) / semi.values[inside]
            m["max_rel_deviation"] = float(np.max(rel))
        else:
            m["max_rel_deviation"] = None
        valid = times <= pred.t_max
        m["slope_quantum"] = fit_loglog_slope(scaled[valid], q_series.values[valid],
                                              cfg.fit_min, cfg.fit_max)
        m["plateau"] = plateau_stats(q_series, t_decay, cfg.plateau_fraction)
        m["propagation"] = {"steps": stats.steps, "matvecs": stats.matvecs,
                            "halvings": stats.halvings, "max_norm_drift": stats.max_norm_drift}
    return m


def _run_cell(args) -> RunRecord | CellFailure:
    cfg, hbar, delta, quantum = args
    try:
        return run_experiment(cfg, hbar, delta, quantum)
    except (ConfigError, TruncationError) as exc:
        kind = "config" if isinstance(exc, ConfigError) else "numerical"
        return CellFailure(hbar, delta, kind, str(exc), traceback.format_exc())
    except NUMERICAL_ERRORS as exc:
        return CellFailure(hbar, delta, "numerical", str(exc), traceback.format_exc())
    except Exception as exc:  # isolate the cell; the sweep goes on
        return CellFailure(hbar, delta, "numerical", f"{type(exc).__name__}: {exc}",
                           traceback.format_exc())


def run_sweep(cfg: ExperimentConfig, workers: int | None = None,
              quantum: bool = True) -> list[RunRecord | CellFailure]:
    """Every (hbar, delta) pair as an independent task, returned in grid order."""
    workers = cfg.workers if workers is None else workers
    tasks = [(cfg, h, d, quantum) for h, d in itertools.product(cfg.hbar_list, cfg.delta_list)]
    if workers <= 1 or len(tasks) == 1:
        results = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, tasks))
    for r in results:
        if isinstance(r, CellFailure):
            log.warning("cell hbar=%g delta=%g failed: %s", r.hbar, r.delta, r.message)
    return results
