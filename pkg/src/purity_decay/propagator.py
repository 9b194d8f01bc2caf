"""Time evolution under sparse time-independent Hamiltonians.

``evolve`` applies exp(-i H t / hbar) with either a Lanczos (Krylov) or a
Chebyshev expansion. ``echo_evolve`` propagates with the effective echo
Hamiltonian delta * Vbar, where Vbar is the part of V that commutes with a
diagonal H0.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.special import jv

from .fock import SparseOperator, StateVector

NORM_DRIFT_TOL = 1e-9


class PropagationError(RuntimeError):
    pass


class PropagationWarning(UserWarning):
    pass


class Method(enum.Enum):
    KRYLOV = "krylov"
    CHEBYSHEV = "chebyshev"


@dataclass(frozen=True)
class PropagationConfig:
    method: Method = Method.KRYLOV
    step_dt: float | None = None     # None: chosen from the Gershgorin spectral width
    krylov_dim: int = 30
    target_error_per_step: float = 1e-10
    renormalize_each_step: bool = True

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if self.krylov_dim < 4:
            raise ValueError("krylov_dim must be >= 4")
        if self.step_dt is not None and not (np.isfinite(self.step_dt) and self.step_dt > 0):
            raise ValueError("step_dt must be a positive finite number")
        if self.target_error_per_step <= 0:
            raise ValueError("target_error_per_step must be positive")


@dataclass(frozen=True)
class TimeGrid:
    sample_times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.sample_times, dtype=float).reshape(-1)
        if t.size == 0:
            raise ValueError("time grid is empty")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be non-negative and strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "sample_times", t)

    def __len__(self):
        return self.sample_times.shape[0]


@dataclass
class PropagationStats:
    steps: int = 0
    matvecs: int = 0
    halvings: int = 0
    max_norm_drift: float = 0.0
    max_step_error: float = 0.0


def spectral_bounds(H: SparseOperator) -> tuple[float, float]:
    """Gershgorin interval containing the spectrum of a hermitian operator."""
    m = H.matrix
    diag = m.diagonal().real
    radius = np.asarray(abs(m).sum(axis=1)).ravel() - np.abs(m.diagonal())
    return float(np.min(diag - radius)), float(np.max(diag + radius))


def _lanczos(matrix: sp.csr_matrix, v: np.ndarray, m: int):
    """Orthonormal Krylov basis (rows) and tridiagonal coefficients.

    One full Gram-Schmidt pass per vector keeps the basis orthonormal at m ~ 30.
    """
    n = v.shape[0]
    basis = np.empty((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    basis[0] = v
    k_used = m
    for k in range(m):
        w = matrix @ basis[k]
        alpha[k] = np.vdot(basis[k], w).real
        w = w - basis[: k + 1].T @ (basis[: k + 1].conj() @ w)
        beta[k] = np.linalg.norm(w)
        if k + 1 < m:
            if beta[k] <= 1e-13 * max(abs(alpha[k]), 1.0):
                k_used = k + 1
                break
            basis[k + 1] = w / beta[k]
    return basis[:k_used], alpha[:k_used], beta[:k_used], k_used


class _KrylovStepper:
    def __init__(self, H: SparseOperator, hbar: float, cfg: PropagationConfig, stats: PropagationStats):
        self.matrix = H.matrix / hbar
        self.cfg = cfg
        self.stats = stats
        lo, hi = spectral_bounds(H)
        width = max((hi - lo) / hbar, 1e-300)
        # an explicit step_dt is a hard cap; the automatic step adapts to the error estimate
        self.adaptive = cfg.step_dt is None
        self.max_tau = cfg.step_dt if cfg.step_dt is not None else 0.4 * cfg.krylov_dim / width

    def advance(self, psi: np.ndarray, duration: float) -> np.ndarray:
        remaining = duration
        while remaining > 1e-15 * max(duration, 1.0):
            tau = min(self.max_tau, remaining)
            psi, taken, err = self._substep(psi, tau)
            psi = _norm_check(psi, self.cfg, self.stats)
            remaining -= taken
            if not self.adaptive:
                continue
            if taken < tau:
                self.max_tau = taken
            elif tau == self.max_tau and err < 1e-2 * self.cfg.target_error_per_step:
                self.max_tau *= 1.25
        return psi

    def _substep(self, psi: np.ndarray, tau: float):
        beta0 = np.linalg.norm(psi)
        basis, alpha, beta, k = _lanczos(self.matrix, psi / beta0, self.cfg.krylov_dim)
        self.stats.matvecs += k
        breakdown = k < self.cfg.krylov_dim
        evals, evecs = _tridiag_eig(alpha, beta[:-1])
        if not breakdown:
            # error estimate: distance to the one-smaller Krylov approximation
            evals_s, evecs_s = _tridiag_eig(alpha[:-1], beta[:-2])
        for _ in range(60):
            coeffs = evecs @ (np.exp(-1j * tau * evals) * evecs[0].conj())
            if breakdown:
                err = 0.0
            else:
                smaller = evecs_s @ (np.exp(-1j * tau * evals_s) * evecs_s[0].conj())
                err = beta0 * float(np.sqrt(np.sum(np.abs(coeffs[:-1] - smaller) ** 2)
                                            + abs(coeffs[-1]) ** 2))
            if err <= self.cfg.target_error_per_step:
                break
            tau *= 0.5
            self.stats.halvings += 1
        else:
            raise PropagationError("Krylov step failed to reach the target error")
        self.stats.steps += 1
        self.stats.max_step_error = max(self.stats.max_step_error, err)
        return beta0 * (basis.T @ coeffs), tau, err


def _tridiag_eig(diag: np.ndarray, off: np.ndarray):
    if diag.shape[0] == 1:
        return diag.copy(), np.ones((1, 1))
    return eigh_tridiagonal(diag, off)


class _ChebyshevStepper:
    def __init__(self, H: SparseOperator, hbar: float, cfg: PropagationConfig, stats: PropagationStats):
        lo, hi = spectral_bounds(H)
        self.centre = 0.5 * (hi + lo) / hbar
        self.half = max(0.5 * (hi - lo) / hbar, 1e-12)
        dim = H.dim
        self.scaled = (H.matrix / hbar - self.centre * sp.identity(dim, format="csr")) / self.half
        self.cfg = cfg
        self.stats = stats
        self.max_tau = cfg.step_dt if cfg.step_dt is not None else 40.0 / self.half

    def advance(self, psi: np.ndarray, duration: float) -> np.ndarray:
        remaining = duration
        while remaining > 1e-15 * max(duration, 1.0):
            tau = min(self.max_tau, remaining)
            psi = _norm_check(self._step(psi, tau), self.cfg, self.stats)
            remaining -= tau
        return psi

    def _step(self, psi: np.ndarray, tau: float) -> np.ndarray:
        x = self.half * tau
        tol = self.cfg.target_error_per_step
        n_max = int(x + 20 + 10 * np.sqrt(x)) + 40
        bessel = jv(np.arange(n_max), x)
        t_prev = psi
        t_cur = self.scaled @ psi
        acc = bessel[0] * t_prev + 2.0 * (-1j) * bessel[1] * t_cur
        k = 1
        while True:
            k += 1
            if k >= n_max:
                raise PropagationError("Chebyshev series did not converge")
            t_next = 2.0 * (self.scaled @ t_cur) - t_prev
            acc = acc + 2.0 * (-1j) ** k * bessel[k] * t_next
            t_prev, t_cur = t_cur, t_next
            if k > x and abs(bessel[k]) < 0.1 * tol and abs(bessel[k - 1]) < 0.1 * tol:
                break
        self.stats.matvecs += k
        self.stats.steps += 1
        return np.exp(-1j * self.centre * tau) * acc


def evolve(H: SparseOperator, psi0: StateVector, grid: TimeGrid, cfg: PropagationConfig | None = None,
           hbar: float = 1.0, stats: PropagationStats | None = None) -> list[StateVector]:
    """States exp(-i H t_k / hbar) psi0 at every sample time of ``grid``.

    ``hbar`` is explicit and never folded into ``H`` by the caller.
    """
    cfg = cfg or PropagationConfig()
    stats = stats if stats is not None else PropagationStats()
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if H.dim != psi0.space.total_dim:
        raise ValueError("Hamiltonian and state dimensions differ")
    if not H.is_hermitian():
        raise ValueError("Hamiltonian is not hermitian")

    out: list[StateVector] = []
    psi = np.array(psi0.amplitudes)
    if H.is_zero():
        return [psi0 for _ in grid.sample_times]
    stepper_cls = _KrylovStepper if cfg.method is Method.KRYLOV else _ChebyshevStepper
    stepper = stepper_cls(H, hbar, cfg, stats)
    t_now = 0.0
    for t in grid.sample_times:
        if t > t_now:
            psi = stepper.advance(psi, t - t_now)
            t_now = t
        out.append(StateVector(psi, psi0.space, norm_tolerance=1e-6))
    if stats.max_norm_drift > NORM_DRIFT_TOL:
        warnings.warn(f"norm drift {stats.max_norm_drift:.2e} exceeded {NORM_DRIFT_TOL:g}",
                      PropagationWarning, stacklevel=2)
    return out


def _norm_check(psi, cfg, stats):
    norm = np.linalg.norm(psi)
    if not np.isfinite(norm):
        raise PropagationError("propagated state is not finite")
    stats.max_norm_drift = max(stats.max_norm_drift, abs(norm - 1.0))
    return psi / norm if cfg.renormalize_each_step else psi


def _energy_labels(energies: np.ndarray, rtol: float) -> np.ndarray:
    """Integer label per level; levels closer than the tolerance share a label."""
    tol = rtol * max(1.0, float(np.max(np.abs(energies))))
    order = np.argsort(energies, kind="stable")
    jumps = np.diff(energies[order]) > tol
    labels = np.empty(energies.shape[0], dtype=np.int64)
    labels[order] = np.concatenate([[0], np.cumsum(jumps)])
    return labels


def diagonal_average(V: SparseOperator, H0: SparseOperator, weights=None,
                     rtol: float = 1e-10, weight_tol: float = 1e-12) -> SparseOperator:
    """Infinite-time average of V in the interaction picture of a diagonal H0.

    This is the projection of V onto the eigenspaces of H0: the diagonal of V
    when H0 is non-degenerate, block-diagonal parts otherwise. ``weights``
    (initial Fock-basis populations) select which degeneracies warrant a
    warning.
    """
    if not H0.is_diagonal():
        raise ValueError("H0 must be diagonal in the Fock basis")
    if V.dim != H0.dim:
        raise ValueError("V and H0 dimensions differ")
    labels = _energy_labels(H0.diagonal_values().real, rtol)
    coo = V.matrix.tocoo()
    keep = labels[coo.row] == labels[coo.col]
    off = keep & (coo.row != coo.col)
    if np.any(off):
        rows, cols = coo.row[off], coo.col[off]
        if weights is not None:
            w = np.asarray(weights, dtype=float)
            hot = (w[rows] > weight_tol) | (w[cols] > weight_tol)
            rows, cols = rows[hot], cols[hot]
        pairs = sorted({(int(min(r, c)), int(max(r, c))) for r, c in zip(rows, cols)})
        if pairs:
            shown = ", ".join(map(str, pairs[:10])) + (" ..." if len(pairs) > 10 else "")
            warnings.warn(f"H0 has degenerate levels coupled by V: {shown}; "
                          "using the block-diagonal average", PropagationWarning, stacklevel=2)
    m = sp.coo_matrix((coo.data[keep], (coo.row[keep], coo.col[keep])), shape=V.matrix.shape)
    return SparseOperator(m, V.hermitian)


def echo_evolve(model, psi0: StateVector, grid: TimeGrid, cfg: PropagationConfig | None = None,
                stats: PropagationStats | None = None) -> list[StateVector]:
    """Evolve with the effective echo Hamiltonian delta * Vbar."""
    weights = np.abs(psi0.amplitudes) ** 2
    vbar = diagonal_average(model.V, model.H0, weights=weights)
    if model.delta == 0.0:
        return [psi0 for _ in grid.sample_times]
    if vbar.is_diagonal():
        phases = model.delta * vbar.diagonal_values().real / model.hbar
        return [StateVector(np.exp(-1j * phases * t) * psi0.amplitudes, psi0.space)
                for t in grid.sample_times]
    h_eff = SparseOperator(model.delta * vbar.matrix, hermitian=True)
    return evolve(h_eff, psi0, grid, cfg, model.hbar, stats)


def free_phase_back(H0: SparseOperator, states: Sequence[StateVector], times, hbar: float) -> list[StateVector]:
    """Apply U0^+(t) = exp(+i H0 t / hbar) for diagonal H0 (interaction picture)."""
    if not H0.is_diagonal():
        raise ValueError("H0 must be diagonal")
    e = H0.diagonal_values().real / hbar
    return [StateVector(np.exp(1j * e * t) * s.amplitudes, s.space, s.norm_tolerance)
            for s, t in zip(states, times)]
