"""Sparse operators on truncated multi-mode bosonic Fock spaces.

Modes are ordered row-major: mode 0 is the slowest-varying index of the
flattened basis, so a basis label ``(n_0, n_1, ..., n_{k-1})`` maps to
``np.ravel_multi_index(n, mode_dims)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

DROP_TOL = 1e-15


class DimensionError(ValueError):
    """Raised on inconsistent operator / state / space dimensions."""


@dataclass(frozen=True)
class SpaceConfig:
    mode_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.mode_dims)
        if not dims:
            raise DimensionError("a Fock space needs at least one mode")
        if any(d < 2 for d in dims):
            raise DimensionError(f"every mode dimension must be >= 2, got {dims}")
        object.__setattr__(self, "mode_dims", dims)

    @property
    def n_modes(self) -> int:
        return len(self.mode_dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.mode_dims))


def _canonical(matrix) -> sp.csr_matrix:
    m = sp.csr_matrix(matrix, dtype=complex, copy=True)
    m.sum_duplicates()
    if m.nnz:
        m.data[np.abs(m.data) < DROP_TOL] = 0.0
        m.eliminate_zeros()
    m.sort_indices()
    return m


@dataclass(frozen=True, eq=False)
class SparseOperator:
    """Complex square sparse matrix in canonical CSR form.

    ``hermitian`` is a hint carried through linear combinations; it is
    verified at construction so a wrong hint fails early.
    """

    matrix: sp.csr_matrix
    hermitian: bool = False
    _checked: bool = field(default=False, repr=False)

    def __post_init__(self):
        m = _canonical(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got {m.shape}")
        m.data.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        if self.hermitian and not self._checked and not self.is_hermitian():
            raise ValueError("operator flagged hermitian but is not")

    @classmethod
    def from_entries(cls, dim: int, entries: Iterable[tuple[int, int, complex]],
                     hermitian: bool = False) -> "SparseOperator":
        entries = list(entries)
        if entries:
            rows, cols, vals = zip(*entries)
        else:
            rows, cols, vals = (), (), ()
        m = sp.coo_matrix((np.asarray(vals, dtype=complex), (rows, cols)), shape=(dim, dim))
        return cls(m, hermitian)

    @classmethod
    def diagonal(cls, values: Sequence[float]) -> "SparseOperator":
        values = np.asarray(values)
        return cls(sp.diags(values.astype(complex), format="csr"),
                   hermitian=bool(np.all(np.isreal(values))))

    @classmethod
    def identity(cls, dim: int) -> "SparseOperator":
        return cls(sp.identity(dim, dtype=complex, format="csr"), hermitian=True, _checked=True)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entries(self) -> list[tuple[int, int, complex]]:
        coo = self.matrix.tocoo()
        return list(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal_values(self) -> np.ndarray:
        return self.matrix.diagonal()

    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.conj().T
        if diff.nnz == 0:
            return True
        scale = max(1.0, float(np.max(np.abs(self.matrix.data)))) if self.nnz else 1.0
        return float(np.max(np.abs(diff.data))) <= atol * scale

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T, self.hermitian, _checked=True)

    def is_zero(self, atol: float = 0.0) -> bool:
        return self.nnz == 0 or float(np.max(np.abs(self.matrix.data))) <= atol

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return op_combine([(1.0, self), (1.0, other)])

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return op_combine([(1.0, self), (-1.0, other)])

    def __mul__(self, scalar: complex) -> "SparseOperator":
        return op_combine([(scalar, self)])

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            return op_multiply(self, other)
        return apply(self, other)


def _require_dim(dim: int) -> None:
    if int(dim) < 2:
        raise DimensionError(f"Fock truncation must be >= 2, got {dim}")


def lowering_op(dim: int) -> SparseOperator:
    _require_dim(dim)
    n = np.arange(1, dim)
    m = sp.csr_matrix((np.sqrt(n).astype(complex), (n - 1, n)), shape=(dim, dim))
    return SparseOperator(m)


def raising_op(dim: int) -> SparseOperator:
    return lowering_op(dim).dagger()


def number_op(dim: int) -> SparseOperator:
    _require_dim(dim)
    return SparseOperator.diagonal(np.arange(dim, dtype=float))


def quadrature_squared_op(dim: int) -> SparseOperator:
    """(a + a^+)^2 cut to ``dim`` levels.

    Built from the exact matrix elements, not as a product of truncated
    ladder matrices, so the diagonal is 2n+1 on every retained level.
    """
    _require_dim(dim)
    n = np.arange(dim)
    off = np.sqrt((n[:-2] + 1.0) * (n[:-2] + 2.0))
    m = sp.diags([off, 2.0 * n + 1.0, off], [-2, 0, 2], shape=(dim, dim), format="csr")
    return SparseOperator(m, hermitian=True)


def embed(op: SparseOperator, mode: int, space: SpaceConfig) -> SparseOperator:
    """Return 1 x ... x op x ... x 1 acting on ``mode`` of ``space``."""
    if not 0 <= mode < space.n_modes:
        raise DimensionError(f"mode {mode} out of range for {space.n_modes} modes")
    if op.dim != space.mode_dims[mode]:
        raise DimensionError(
            f"operator dim {op.dim} does not match mode {mode} dim {space.mode_dims[mode]}")
    left = int(np.prod(space.mode_dims[:mode]))
    right = int(np.prod(space.mode_dims[mode + 1:]))
    m = op.matrix
    if right > 1:
        m = sp.kron(m, sp.identity(right, dtype=complex, format="csr"), format="csr")
    if left > 1:
        m = sp.kron(sp.identity(left, dtype=complex, format="csr"), m, format="csr")
    return SparseOperator(m, op.hermitian, _checked=True)


def op_combine(terms: Sequence[tuple[complex, SparseOperator]]) -> SparseOperator:
    """Sparse linear combination sum_k c_k A_k."""
    if not terms:
        raise ValueError("op_combine needs at least one term")
    dim = terms[0][1].dim
    acc = sp.csr_matrix((dim, dim), dtype=complex)
    hermitian = True
    for coeff, op in terms:
        if op.dim != dim:
            raise DimensionError(f"cannot combine operators of dims {dim} and {op.dim}")
        acc = acc + complex(coeff) * op.matrix
        hermitian = hermitian and op.hermitian and complex(coeff).imag == 0.0
    return SparseOperator(acc, hermitian, _checked=True)


def op_multiply(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    if a.dim != b.dim:
        raise DimensionError(f"cannot multiply operators of dims {a.dim} and {b.dim}")
    return SparseOperator(a.matrix @ b.matrix)


def apply(op: SparseOperator, state) -> np.ndarray:
    """Matrix-vector action. Accepts a StateVector or a raw vector; never renormalizes."""
    vec = state.amplitudes if isinstance(state, StateVector) else np.asarray(state)
    if vec.shape[0] != op.dim:
        raise DimensionError(f"operator dim {op.dim} does not match vector length {vec.shape[0]}")
    return op.matrix @ vec


def commutator(a: SparseOperator, b: SparseOperator) -> SparseOperator:
    return op_combine([(1.0, op_multiply(a, b)), (-1.0, op_multiply(b, a))])


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    space: SpaceConfig
    norm_tolerance: float = 1e-10

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.space.total_dim:
            raise DimensionError(
                f"state length {amps.shape[0]} does not match space dim {self.space.total_dim}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.norm_tolerance:
            raise ValueError(f"state norm {norm!r} differs from 1 by more than {self.norm_tolerance}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, vector, space: SpaceConfig, norm_tolerance: float = 1e-10) -> "StateVector":
        vector = np.asarray(vector, dtype=complex)
        return cls(vector / np.linalg.norm(vector), space, norm_tolerance)

    @classmethod
    def basis(cls, occupations: Sequence[int], space: SpaceConfig) -> "StateVector":
        vec = np.zeros(space.total_dim, dtype=complex)
        vec[np.ravel_multi_index(tuple(occupations), space.mode_dims)] = 1.0
        return cls(vec, space)

    def expectation(self, op: SparseOperator) -> complex:
        return complex(np.vdot(self.amplitudes, apply(op, self.amplitudes)))
