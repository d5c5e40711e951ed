"""Compressible versus soundproof comparisons over an epsilon sweep.

Both experiments integrate the full model and the soundproof model from
matched data and record the supremum of an error metric over the samples.
The well-prepared metric compares states directly (with the compressible
pressure measured against ``eps * p_sp``); the ill-prepared metric compares
truncated slow projections so that acoustic content drops out.
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from experiments.convergence import ConvergenceRow, ConvergenceTable
from experiments.initial_data import InitialDataSpec, build_initial_data
from solver.dynamics import soundproof_pressure
from solver.integrate import IntegratorConfig, Model, integrate
from solver.params import ModelParams
from solver.spectral_core import ReducedState, Resolution, State, inner_product, truncate
from solver.wave_modes import Branch, Eta, project, reduce_dimension

logger = logging.getLogger(__name__)

DEFAULT_EPSILONS = (0.2, 0.1, 0.05, 0.025)


def wellprepared_metric(full: State, soundproof: ReducedState, params: ModelParams) -> float:
    """``||(q - eps p_sp, H - H_sp, v - v_sp, w - w_sp)||`` with ``p_sp`` recomputed from ``soundproof``."""
    p_sp = soundproof_pressure(soundproof, params).solution
    q_gap = full.q - p_sp * params.epsilon
    rest = reduce_dimension(full) - soundproof
    return float(np.sqrt(q_gap.norm() ** 2 + inner_product(rest, rest)))


def illprepared_metric(full: State, soundproof: ReducedState, eta: Eta | float, K: int) -> float:
    """Squared L2 distance between the truncated slow part of ``full`` and truncated ``soundproof``."""
    slow = reduce_dimension(project(full, eta, [Branch.MF, Branch.GW]))
    gap = truncate(slow, K) - truncate(soundproof, K)
    return float(inner_product(gap, gap))


def _sampled_states(model: Model, initial, cfg: IntegratorConfig, params: ModelParams) -> list:
    samples: list = []
    integrate(model, initial, cfg, params, observers=[lambda t, state: samples.append(state)])
    return samples


def _paired_samples(
    epsilon: float, base: ModelParams, resolution: Resolution, spec: InitialDataSpec, cfg: IntegratorConfig
):
    params = base.with_epsilon(epsilon)
    logger.info("epsilon=%.4g: integrating full and soundproof models to t=%.3g", epsilon, cfg.t_end)
    data = build_initial_data(spec, params, resolution)
    full = _sampled_states(Model.FULL, data.full, cfg, params)
    reduced = _sampled_states(Model.SOUNDPROOF, data.soundproof, cfg, params)
    return params, full, reduced


def _summary(epsilon: float, errors: list[float]) -> ConvergenceRow:
    return ConvergenceRow(
        epsilon,
        {"sup_error": max(errors), "final_error": errors[-1], "initial_error": errors[0]},
    )


def wellprepared_row(
    epsilon: float, base: ModelParams, resolution: Resolution, spec: InitialDataSpec, cfg: IntegratorConfig
) -> ConvergenceRow:
    params, full, reduced = _paired_samples(epsilon, base, resolution, spec, cfg)
    errors = [wellprepared_metric(u, s, params) for u, s in zip(full, reduced)]
    logger.info("epsilon=%.4g: sup error %.3e", epsilon, max(errors))
    return _summary(epsilon, errors)


def illprepared_row(
    epsilon: float,
    base: ModelParams,
    resolution: Resolution,
    spec: InitialDataSpec,
    cfg: IntegratorConfig,
    K: int,
) -> ConvergenceRow:
    params, full, reduced = _paired_samples(epsilon, base, resolution, spec, cfg)
    errors = [illprepared_metric(u, s, params.eta, K) for u, s in zip(full, reduced)]
    logger.info("epsilon=%.4g: sup squared error %.3e", epsilon, max(errors))
    return _summary(epsilon, errors)


def _sweep(row, epsilons: Sequence[float], workers: int) -> list[ConvergenceRow]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(row, epsilons))
    return [row(eps) for eps in epsilons]


def _config(T: float, dt: float, sample_stride: int, cfg: IntegratorConfig | None) -> IntegratorConfig:
    if cfg is not None:
        return cfg.model_copy(update={"t_end": T})
    return IntegratorConfig(dt=dt, t_end=T, sample_stride=sample_stride)


def experiment_wellprepared(
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    nu: float = 0.25,
    sigma: float | None = None,
    resolution: Resolution = Resolution.cube(32),
    T: float = 0.5,
    spec: InitialDataSpec | None = None,
    *,
    params: ModelParams | None = None,
    cfg: IntegratorConfig | None = None,
    dt: float = 0.0025,
    sample_stride: int = 10,
    workers: int = 1,
) -> ConvergenceTable:
    """Sup-in-time error between the compressible and soundproof models for acoustic-free data.

    Args:
        epsilons: Mach numbers to sweep
        nu: Stratification exponent
        sigma: Data exponent, defaults to ``mu``
        resolution: Lattice
        T: Final time
        spec: Initial data recipe; any acoustic weight is dropped
        params: Base constants and profiles (epsilon, nu and sigma are overridden)
        cfg: Integrator settings (``t_end`` is overridden by ``T``)
        dt: Step size when ``cfg`` is not given
        sample_stride: Steps between error samples when ``cfg`` is not given
        workers: Process count for the sweep

    Returns:
        Table with ``sup_error``, ``final_error`` and ``initial_error`` per epsilon
    """
    spec = (spec or InitialDataSpec()).with_acoustic(0.0)
    base = (params or ModelParams()).model_copy(update={"nu": nu, "sigma": sigma})
    base = ModelParams.model_validate(base.model_dump())
    cfg = _config(T, dt, sample_stride, cfg)
    row = functools.partial(wellprepared_row, base=base, resolution=resolution, spec=spec, cfg=cfg)
    mu = base.mu
    return ConvergenceTable(
        "wellprepared",
        _sweep(row, epsilons, workers),
        predicted={"sup_error": max(mu - nu, mu - base.sigma_value)},
        notes={"nu": nu, "sigma": base.sigma_value, "resolution": str(resolution), "T": T, "dt": cfg.dt},
    )


def experiment_illprepared(
    epsilons: Sequence[float] = DEFAULT_EPSILONS,
    nu: float = 0.25,
    sigma: float | None = None,
    K: int = 4,
    resolution: Resolution = Resolution.cube(32),
    T: float = 0.5,
    spec: InitialDataSpec | None = None,
    *,
    params: ModelParams | None = None,
    cfg: IntegratorConfig | None = None,
    dt: float = 0.0025,
    sample_stride: int = 10,
    workers: int = 1,
) -> ConvergenceTable:
    """Sup-in-time squared error of truncated slow projections for data with acoustic content.

    ``sigma`` defaults to ``mu / 2`` and ``spec`` to unit weights on all
    three branches. ``initial_error`` is the basis-swap residual left by
    Leray-projecting the reduced slow data.

    Raises:
        ValueError: If ``K`` reaches the Nyquist index of ``resolution``
    """
    if K < 0 or K > resolution.max_resolved_index:
        raise ValueError(f"K={K} must lie in [0, {resolution.max_resolved_index}] for {resolution}")
    mu = 1.0 - 2.0 * nu
    sigma = mu / 2 if sigma is None else sigma
    spec = spec or InitialDataSpec().with_acoustic(1.0)
    base = (params or ModelParams()).model_copy(update={"nu": nu, "sigma": sigma})
    base = ModelParams.model_validate(base.model_dump())
    cfg = _config(T, dt, sample_stride, cfg)
    row = functools.partial(illprepared_row, base=base, resolution=resolution, spec=spec, cfg=cfg, K=K)
    return ConvergenceTable(
        "illprepared",
        _sweep(row, epsilons, workers),
        predicted={"sup_error": min(2 * mu - 2 * sigma, 1.0)},
        notes={"nu": nu, "sigma": sigma, "K": K, "resolution": str(resolution), "T": T, "dt": cfg.dt},
    )
