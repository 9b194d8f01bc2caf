"""Reduced density matrices, purity and purity time series."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fock import DimensionError, SpaceConfig, StateVector


class Provenance(enum.Enum):
    QUANTUM_FULL = "quantum_full"
    QUANTUM_ECHO = "quantum_echo"
    SEMICLASSICAL = "semiclassical"
    CLOSED_FORM = "closed_form"


@dataclass(frozen=True)
class Bipartition:
    d_A_modes: int
    d_B_modes: int
    dim_A: int
    dim_B: int

    @classmethod
    def split(cls, space: SpaceConfig, d_A_modes: int) -> "Bipartition":
        if not 0 < d_A_modes < space.n_modes:
            raise DimensionError(f"cannot put {d_A_modes} of {space.n_modes} modes in A")
        dims = space.mode_dims
        return cls(d_A_modes, space.n_modes - d_A_modes,
                   int(np.prod(dims[:d_A_modes])), int(np.prod(dims[d_A_modes:])))

    @property
    def total_dim(self) -> int:
        return self.dim_A * self.dim_B

    @property
    def min_purity(self) -> float:
        return 1.0 / min(self.dim_A, self.dim_B)


def _coefficients(state, part: Bipartition) -> np.ndarray:
    amps = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    if amps.shape[0] != part.total_dim:
        raise DimensionError(f"state length {amps.shape[0]} does not match bipartition "
                             f"{part.dim_A}x{part.dim_B}")
    return amps.reshape(part.dim_A, part.dim_B)


def reduced_density(state, part: Bipartition) -> np.ndarray:
    c = _coefficients(state, part)
    return c @ c.conj().T


def purity(state, part: Bipartition, orientation: str = "auto") -> float:
    """tr(rho_A^2) from the Gram matrix of the smaller subsystem.

    ``orientation`` forces the ``"A"`` (C C^+) or ``"B"`` (C^+ C) Gram matrix;
    both give the same number.
    """
    c = _coefficients(state, part)
    if orientation == "auto":
        orientation = "B" if part.dim_B <= part.dim_A else "A"
    if orientation == "B":
        gram = c.conj().T @ c
    elif orientation == "A":
        gram = c @ c.conj().T
    else:
        raise ValueError("orientation must be 'auto', 'A' or 'B'")
    return float(np.sum(np.abs(gram) ** 2))


@dataclass(frozen=True, eq=False)
class PuritySeries:
    times: np.ndarray
    values: np.ndarray
    provenance: Provenance
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d of equal length")
        if np.any(np.diff(t) <= 0) or (t.size and t[0] < 0):
            raise ValueError("times must be non-negative and strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("purity values must be finite")
        if np.any(v <= 0) or np.any(v > 1.0 + 1e-10):
            raise ValueError("purity values must lie in (0, 1]")
        t.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def __len__(self):
        return self.times.shape[0]


def purity_series(states: Sequence, times, part: Bipartition,
                  provenance: Provenance = Provenance.QUANTUM_FULL,
                  metadata: dict | None = None) -> PuritySeries:
    times = np.asarray(times, dtype=float)
    if len(states) != times.shape[0]:
        raise ValueError(f"{len(states)} states for {times.shape[0]} times")
    values = np.array([purity(s, part) for s in states])
    return PuritySeries(times, values, provenance, dict(metadata or {}))


def plateau_estimate(series: PuritySeries, window_fraction: float = 0.2) -> tuple[float, float]:
    """Mean and standard deviation of the trailing ``window_fraction`` of samples."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must be in (0, 1]")
    n = int(round(window_fraction * len(series)))
    if n < 8:
        raise ValueError(f"plateau window holds {n} samples, need at least 8")
    tail = series.values[-n:]
    return float(np.mean(tail)), float(np.std(tail))
