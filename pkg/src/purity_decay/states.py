"""Coherent product states and their action-space statistics."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from .fock import DimensionError, SpaceConfig, StateVector

TAIL_TOL = 1e-10
GUARD_TOL = 1e-8
GUARD_MARGIN = 5


class TruncationError(ValueError):
    def __init__(self, message: str, minimal_dim: int):
        super().__init__(message)
        self.minimal_dim = minimal_dim


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CoherentSpec:
    j_star: float
    hbar: float

    def __post_init__(self):
        if self.j_star < 0 or self.hbar <= 0:
            raise ValueError("need j_star >= 0 and hbar > 0")

    @property
    def alpha(self) -> float:
        return math.sqrt(self.j_star / self.hbar)

    @property
    def mean_occupation(self) -> float:
        return self.j_star / self.hbar

    @property
    def squeezing(self) -> float:
        return 1.0 / (2.0 * self.j_star)

    @property
    def n_eff_estimate(self) -> float:
        """Order-of-magnitude count of populated action levels, sqrt(8 j*/hbar)."""
        return math.sqrt(8.0 * self.j_star / self.hbar)


@dataclass(frozen=True)
class ActionDensity:
    probabilities: np.ndarray
    participation_ratio: float


def poisson_tail(mean: float, level: int) -> float:
    """P(n >= level) for a Poisson distribution."""
    if level <= 0:
        return 1.0
    return float(poisson.sf(level - 1, mean))


def minimal_dim(spec: CoherentSpec, tail_tol: float = TAIL_TOL) -> int:
    dim = 2
    while poisson_tail(spec.mean_occupation, dim) >= tail_tol:
        dim += 1
    return dim


def auto_mode_dim(j_star: float, hbar: float) -> int:
    """Default per-mode truncation: ceil(<n> + 8 sqrt(<n>)) + 4."""
    nbar = j_star / hbar
    return int(math.ceil(nbar + 8.0 * math.sqrt(nbar))) + 4


def coherent_state(spec: CoherentSpec, dim: int) -> StateVector:
    """Truncated coherent state with real amplitude alpha = sqrt(j*/hbar)."""
    if dim < 2:
        raise DimensionError("dim must be >= 2")
    mean = spec.mean_occupation
    tail = poisson_tail(mean, dim)
    if tail >= TAIL_TOL:
        need = minimal_dim(spec)
        raise TruncationError(
            f"Poisson tail {tail:.3g} beyond level {dim - 1} exceeds {TAIL_TOL:g}; "
            f"use dim >= {need}", need)
    n = np.arange(dim)
    if spec.alpha == 0.0:
        amps = (n == 0).astype(float)
    else:
        amps = np.exp(-0.5 * mean + n * math.log(spec.alpha) - 0.5 * gammaln(n + 1))
    amps = amps / np.linalg.norm(amps)
    return StateVector(amps, SpaceConfig((dim,)))


def product_state(factors: Sequence[StateVector], space: SpaceConfig | None = None) -> StateVector:
    dims = tuple(d for f in factors for d in f.space.mode_dims)
    if space is None:
        space = SpaceConfig(dims)
    elif space.mode_dims != dims:
        raise DimensionError(f"factor dims {dims} do not match space {space.mode_dims}")
    amps = np.ones(1, dtype=complex)
    for f in factors:
        amps = np.kron(amps, f.amplitudes)
    return StateVector(amps / np.linalg.norm(amps), space)


def coherent_product_state(j_stars: Sequence[float], hbar: float, space: SpaceConfig) -> StateVector:
    if len(j_stars) != space.n_modes:
        raise DimensionError("need one j* per mode")
    factors = [coherent_state(CoherentSpec(j, hbar), d) for j, d in zip(j_stars, space.mode_dims)]
    state = product_state(factors, space)
    truncation_guard(state)
    return state


def mode_marginal(state: StateVector, mode: int) -> np.ndarray:
    dims = state.space.mode_dims
    if not 0 <= mode < len(dims):
        raise DimensionError(f"mode {mode} out of range")
    probs = np.abs(state.amplitudes.reshape(dims)) ** 2
    axes = tuple(k for k in range(len(dims)) if k != mode)
    return probs.sum(axis=axes) if axes else probs


def action_density(state: StateVector, mode: int) -> ActionDensity:
    p = mode_marginal(state, mode)
    return ActionDensity(p, float(1.0 / np.sum(p * p)))


def truncation_guard(state: StateVector, margin: int = GUARD_MARGIN, tol: float = GUARD_TOL) -> list[int]:
    """Warn for modes whose population at levels >= N - margin exceeds ``tol``.

    Returns the offending mode indices.
    """
    bad = []
    for mode, dim in enumerate(state.space.mode_dims):
        p = mode_marginal(state, mode)
        tail = float(np.sum(p[max(dim - margin, 0):]))
        if tail > tol:
            bad.append(mode)
            warnings.warn(f"mode {mode}: population {tail:.2e} within {margin} levels of the "
                          f"truncation N={dim}", TruncationWarning, stacklevel=2)
    return bad
