"""Semiclassical purity-decay prediction for integrable uncoupled dynamics.

The chain is: angle-average the classical coupling over the invariant torus,
take the mixed A/B second derivatives of the averaged coupling at the packet
centre, build ``u = Lambda_A^-1 W Lambda_B^-1 W^T`` and evaluate

    I(t) = 1 / sqrt(det(1 + (delta t)^2 u)).

A Monte-Carlo estimate of the underlying phase-space Gaussian integral is
provided as an independent check of the determinant formula.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

# evaluate(j, theta): j and theta broadcast against each other, last axis = DOF
CouplingFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
# vbar(j): last axis = DOF, leading axes are batch
AveragedFn = Callable[[np.ndarray], np.ndarray]

FD_STEP_REL = 1e-3
RANK_RTOL = 1e-10


class SemiclassicalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ClassicalCoupling:
    evaluate: CouplingFn
    d_A: int
    d_B: int

    @property
    def dof(self) -> int:
        return self.d_A + self.d_B

    def __call__(self, j, theta):
        return self.evaluate(np.asarray(j, dtype=float), np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class PacketSpec:
    j_star: np.ndarray
    Lambda_A: np.ndarray
    Lambda_B: np.ndarray

    def __post_init__(self):
        j = np.atleast_1d(np.asarray(self.j_star, dtype=float))
        la = np.atleast_2d(np.asarray(self.Lambda_A, dtype=float))
        lb = np.atleast_2d(np.asarray(self.Lambda_B, dtype=float))
        for name, lam in (("Lambda_A", la), ("Lambda_B", lb)):
            if lam.shape[0] != lam.shape[1] or not np.allclose(lam, lam.T):
                raise ValueError(f"{name} must be a symmetric square matrix")
            if np.any(np.linalg.eigvalsh(lam) <= 0):
                raise ValueError(f"{name} must be positive definite")
        if j.shape[0] != la.shape[0] + lb.shape[0]:
            raise ValueError("j_star length must equal d_A + d_B")
        object.__setattr__(self, "j_star", j)
        object.__setattr__(self, "Lambda_A", la)
        object.__setattr__(self, "Lambda_B", lb)

    @property
    def d_A(self) -> int:
        return self.Lambda_A.shape[0]

    @property
    def d_B(self) -> int:
        return self.Lambda_B.shape[0]

    @classmethod
    def coherent(cls, j_star, d_A: int) -> "PacketSpec":
        """Product of coherent states: diagonal squeezing 1/(2 j*) per DOF."""
        j = np.atleast_1d(np.asarray(j_star, dtype=float))
        lam = 1.0 / (2.0 * j)
        return cls(j, np.diag(lam[:d_A]), np.diag(lam[d_A:]))


@dataclass(frozen=True)
class UMatrix:
    matrix: np.ndarray
    rank: int
    trace: float

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvals(self.matrix).real)


def _angle_grid(n_points: int, dof: int) -> np.ndarray:
    theta_1d = 2.0 * np.pi * np.arange(n_points) / n_points
    return np.array(list(itertools.product(theta_1d, repeat=dof)))


def torus_average(v: ClassicalCoupling, j, quad_points_per_angle: int = 8):
    """Average ``v(j, theta)`` over a uniform tensor grid of angles.

    The uniform rule integrates trigonometric polynomials of degree below
    ``quad_points_per_angle`` exactly. ``j`` may carry leading batch axes.
    """
    if quad_points_per_angle < 4:
        raise ValueError("quad_points_per_angle must be >= 4")
    j = np.asarray(j, dtype=float)
    theta = _angle_grid(quad_points_per_angle, v.dof)
    vals = v(j[..., None, :], theta)
    return np.mean(vals, axis=-1)


def averaged_coupling(v: ClassicalCoupling, quad_points_per_angle: int = 8) -> AveragedFn:
    """Return ``j -> torus_average(v, j)`` as a batched function."""
    return lambda j: torus_average(v, j, quad_points_per_angle)


def mixed_hessian(vbar: AveragedFn, j_star, d_A: int, fd_step: float | None = None) -> np.ndarray:
    """Central-difference matrix of d^2 vbar / dj_A,k dj_B,l at ``j_star``.

    Runs a second pass at half the step and warns when the two disagree by
    more than 1e-6 relative.
    """
    j_star = np.asarray(j_star, dtype=float)
    d = j_star.shape[0]
    if not 0 < d_A < d:
        raise ValueError(f"d_A={d_A} must split {d} DOF into two non-empty parts")
    # 1e-4 leaves ~3e-10 rounding noise in the Hessian; 1e-3 keeps it near 1e-12
    h = FD_STEP_REL * max(float(np.max(np.abs(j_star))), 1.0) if fd_step is None else float(fd_step)
    if h <= 0:
        raise ValueError("fd_step must be positive")
    if h < 1e3 * np.finfo(float).eps * max(float(np.max(np.abs(j_star))), 1.0):
        raise ValueError(f"fd_step {h:g} underflows relative to j* components")

    def stencil(step):
        eye = np.eye(d) * step
        pts = []
        for k in range(d_A):
            for l in range(d_A, d):
                pts.extend([j_star + eye[k] + eye[l], j_star + eye[k] - eye[l],
                            j_star - eye[k] + eye[l], j_star - eye[k] - eye[l]])
        vals = np.asarray(vbar(np.array(pts)), dtype=float).reshape(d_A, d - d_A, 4)
        return (vals[..., 0] - vals[..., 1] - vals[..., 2] + vals[..., 3]) / (4.0 * step * step)

    hess = stencil(h)
    check = stencil(h / 2.0)
    scale = max(float(np.max(np.abs(hess))), 1e-300)
    if np.max(np.abs(hess - check)) > 1e-6 * scale and scale > 1e-300:
        warnings.warn("mixed Hessian changes by more than 1e-6 relative when the "
                      "step is halved; the averaged coupling may be rough near j*",
                      SemiclassicalWarning, stacklevel=2)
    return hess


def numerical_rank(matrix: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(matrix), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def u_matrix(packet: PacketSpec, hess) -> UMatrix:
    w = np.atleast_2d(np.asarray(hess, dtype=float))
    if w.shape != (packet.d_A, packet.d_B):
        raise ValueError(f"Hessian shape {w.shape} does not match ({packet.d_A}, {packet.d_B})")
    try:
        left = np.linalg.solve(packet.Lambda_A, w)
        right = np.linalg.solve(packet.Lambda_B, w.T)
    except np.linalg.LinAlgError as exc:
        raise ValueError("squeezing matrix is singular") from exc
    u = left @ right
    return UMatrix(u, numerical_rank(u), float(np.trace(u)))


def swapped_u_matrix(packet: PacketSpec, hess) -> UMatrix:
    """The u matrix with the roles of A and B exchanged (d_B x d_B)."""
    w = np.atleast_2d(np.asarray(hess, dtype=float))
    swapped = PacketSpec(np.concatenate([packet.j_star[packet.d_A:], packet.j_star[:packet.d_A]]),
                         packet.Lambda_B, packet.Lambda_A)
    return u_matrix(swapped, w.T)


def purity_prediction(u: UMatrix, delta: float, t):
    if delta < 0:
        raise ValueError("delta must be non-negative")
    z = (delta * np.asarray(t, dtype=float)) ** 2
    eye = np.eye(u.matrix.shape[0])
    dets = np.linalg.det(eye + z[..., None, None] * u.matrix)
    out = 1.0 / np.sqrt(np.maximum(dets, 1.0))
    return float(out) if out.ndim == 0 else out


def linear_response(u: UMatrix, delta: float, t):
    out = 1.0 - 0.5 * (delta * np.asarray(t, dtype=float)) ** 2 * u.trace
    return float(out) if np.ndim(out) == 0 else out


def asymptotic_exponent(u: UMatrix) -> int:
    return u.rank


def validity_window(hess_norm: float, delta: float, hbar: float) -> float:
    """Largest t with delta * t * ||W|| < 1/hbar; ``inf`` when unbounded."""
    if hess_norm < 0 or delta < 0 or hbar <= 0:
        raise ValueError("validity_window needs non-negative norm/delta and positive hbar")
    if hess_norm == 0.0 or delta == 0.0:
        return float("inf")
    return 1.0 / (delta * hbar * hess_norm)


def spectral_norm(hess) -> float:
    return float(np.linalg.norm(np.atleast_2d(hess), 2))


def phase_space_purity_mc(vbar: AveragedFn, packet: PacketSpec, hbar: float, delta: float,
                          t: float, n_samples: int = 10**6, seed: int = 0,
                          n_chunks: int = 16) -> tuple[float, float]:
    """Monte-Carlo estimate of the phase-space purity integral.

    Draws two independent action vectors from the Gaussian packet density
    (covariance hbar/2 Lambda^-1 per subsystem) and averages the real part of
    exp(-i delta t Phi / hbar), where Phi is the four-term cross difference of
    the averaged coupling. Returns ``(estimate, standard_error)``.
    """
    if n_samples < 10**4:
        raise ValueError("n_samples must be >= 1e4")
    if delta * t == 0.0:
        return 1.0, 0.0
    d_A, d = packet.d_A, packet.j_star.shape[0]
    cov = np.zeros((d, d))
    cov[:d_A, :d_A] = 0.5 * hbar * np.linalg.inv(packet.Lambda_A)
    cov[d_A:, d_A:] = 0.5 * hbar * np.linalg.inv(packet.Lambda_B)
    chol = np.linalg.cholesky(cov)

    sizes = np.full(n_chunks, n_samples // n_chunks)
    sizes[: n_samples % n_chunks] += 1
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    for size, ss in zip(sizes, streams):
        rng = np.random.default_rng(ss)
        j = packet.j_star + rng.standard_normal((size, d)) @ chol.T
        jt = packet.j_star + rng.standard_normal((size, d)) @ chol.T
        cross_1 = np.concatenate([jt[:, :d_A], j[:, d_A:]], axis=1)
        cross_2 = np.concatenate([j[:, :d_A], jt[:, d_A:]], axis=1)
        phi = vbar(j) - vbar(cross_1) + vbar(jt) - vbar(cross_2)
        vals = np.cos(delta * t * phi / hbar)
        total += float(np.sum(vals))
        total_sq += float(np.sum(vals * vals))
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    stderr = float(np.sqrt(var / (n_samples - 1)))
    if stderr > 0.01:
        warnings.warn(f"Monte-Carlo standard error {stderr:.3g} exceeds 0.01",
                      SemiclassicalWarning, stacklevel=2)
    return mean, stderr


def closed_form_purity(model: str, j_star: float, delta_t):
    """Hand-evaluated determinant formula for the three reference models."""
    x = j_star * np.asarray(delta_t, dtype=float)
    if model == "one_one":
        out = 1.0 / np.sqrt(1.0 + (8.0 * x) ** 2)
    elif model == "two_two_case1":
        out = 1.0 / (1.0 + (8.0 * x) ** 2)
    elif model == "two_two_case2":
        out = 1.0 / np.sqrt(1.0 + (16.0 * x) ** 2)
    else:
        raise ValueError(f"no closed form for model {model!r}")
    return float(out) if np.ndim(out) == 0 else out
