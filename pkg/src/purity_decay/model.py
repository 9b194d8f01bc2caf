"""Hamiltonians of the coupled anharmonic-oscillator models.

Two families are provided: a 1+1 DOF pair of anharmonic oscillators and a
2+2 DOF system whose subsystems each carry a product-form anharmonicity.
Both share the coupling term ``hbar^2 (a_k^+ + a_k)^2 (a_l^+ + a_l)^2``
whose classical limit is ``16 j_k j_l sin^2(theta_k) sin^2(theta_l)``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fock import (SpaceConfig, SparseOperator, DimensionError, embed, op_combine,
                   op_multiply, quadrature_squared_op)
from .semiclassics import ClassicalCoupling


class CouplingCase(enum.Enum):
    CASE_I = "case1"     # V13 + V24
    CASE_II = "case2"    # all to all


@dataclass(frozen=True)
class OneOneParams:
    gamma_A: float = 1.0
    gamma_B: float = 0.6456
    delta_offset: float = 1.2
    hbar: float = 0.01
    delta: float = 0.04

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")


@dataclass(frozen=True)
class TwoTwoParams:
    gamma_1: float = 1.0
    gamma_2: float = 0.64
    delta_offset: float = 1.2
    hbar: float = 0.1
    delta: float = 0.04
    coupling_case: CouplingCase = CouplingCase.CASE_I

    def __post_init__(self):
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.delta < 0:
            raise ValueError("delta must be non-negative")
        object.__setattr__(self, "coupling_case", CouplingCase(self.coupling_case))


@dataclass(frozen=True, eq=False)
class ModelSpec:
    name: str
    space: SpaceConfig
    d_A: int
    d_B: int
    H0: SparseOperator
    V: SparseOperator
    delta: float
    hbar: float
    classical_coupling: ClassicalCoupling
    classical_h0: Callable[[np.ndarray], np.ndarray]
    coupling_pairs: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.d_A + self.d_B != self.space.n_modes:
            raise DimensionError("d_A + d_B must equal the number of modes")
        if not (self.H0.hermitian and self.V.hermitian):
            raise ValueError("H0 and V must be hermitian")


def _mode_diagonal(space: SpaceConfig, mode: int, fn) -> SparseOperator:
    n = np.arange(space.mode_dims[mode], dtype=float)
    return embed(SparseOperator.diagonal(fn(n)), mode, space)


def _coupling_term(space: SpaceConfig, k: int, l: int, hbar: float) -> SparseOperator:
    xk = embed(quadrature_squared_op(space.mode_dims[k]), k, space)
    xl = embed(quadrature_squared_op(space.mode_dims[l]), l, space)
    prod = op_multiply(xk, xl)
    return SparseOperator(hbar**2 * prod.matrix, hermitian=True)


def _pair_coupling(pairs, d: int) -> ClassicalCoupling:
    d_A = d // 2

    def evaluate(j, theta):
        s2 = np.sin(theta) ** 2
        out = 0.0
        for k, l in pairs:
            out = out + 16.0 * j[..., k] * j[..., l] * s2[..., k] * s2[..., l]
        return out

    return ClassicalCoupling(evaluate, d_A, d - d_A)


def build_1x1(p: OneOneParams, space: SpaceConfig) -> ModelSpec:
    if space.n_modes != 2:
        raise DimensionError(f"1+1 model needs 2 modes, got {space.n_modes}")
    hb, off = p.hbar, p.delta_offset
    H0 = op_combine([
        (p.gamma_A, _mode_diagonal(space, 0, lambda n: (hb * n - off) ** 2)),
        (p.gamma_B, _mode_diagonal(space, 1, lambda n: (hb * n - off) ** 2)),
    ])
    pairs = ((0, 1),)
    V = _coupling_term(space, 0, 1, hb)

    def h0(j):
        j = np.asarray(j, dtype=float)
        return p.gamma_A * (j[..., 0] - off) ** 2 + p.gamma_B * (j[..., 1] - off) ** 2

    return ModelSpec("one_one", space, 1, 1, H0, V, p.delta, hb,
                     _pair_coupling(pairs, 2), h0, pairs)


def build_2x2(p: TwoTwoParams, space: SpaceConfig) -> ModelSpec:
    """Modes 0, 1 form subsystem A and modes 2, 3 form B."""
    if space.n_modes != 4:
        raise DimensionError(f"2+2 model needs 4 modes, got {space.n_modes}")
    hb, off = p.hbar, p.delta_offset
    shifted = [_mode_diagonal(space, k, lambda n: hb * n - off) for k in range(4)]
    H0 = op_combine([
        (p.gamma_1, op_multiply(shifted[0], shifted[1])),
        (p.gamma_2, op_multiply(shifted[2], shifted[3])),
    ])
    H0 = SparseOperator(H0.matrix, hermitian=True)
    if p.coupling_case is CouplingCase.CASE_I:
        pairs = ((0, 2), (1, 3))
    else:
        pairs = ((0, 2), (0, 3), (1, 2), (1, 3))
    V = op_combine([(1.0, _coupling_term(space, k, l, hb)) for k, l in pairs])

    def h0(j):
        j = np.asarray(j, dtype=float)
        return (p.gamma_1 * (j[..., 0] - off) * (j[..., 1] - off)
                + p.gamma_2 * (j[..., 2] - off) * (j[..., 3] - off))

    name = "two_two_case1" if p.coupling_case is CouplingCase.CASE_I else "two_two_case2"
    return ModelSpec(name, space, 2, 2, H0, V, p.delta, hb,
                     _pair_coupling(pairs, 4), h0, pairs)


def total_h(m: ModelSpec) -> SparseOperator:
    if m.delta == 0.0:
        return m.H0
    return op_combine([(1.0, m.H0), (m.delta, m.V)])


def classical_hamiltonian(m: ModelSpec, j, theta) -> float:
    j = np.asarray(j, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(j < 0):
        raise ValueError("classical actions must be non-negative")
    return float(m.classical_h0(j) + m.delta * m.classical_coupling(j, theta))
