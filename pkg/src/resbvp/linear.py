"""Linear structure of the boundary value problem.

For the first-order companion form x(t+1) = A(t) x(t) + f(t, x(t)) with
boundary functional sum_k B_k x(k), this module computes:

* the principal fundamental matrix table Phi(0..N) and its inverses,
* the boundary map  Lambda = sum_i B_i Phi(i)  and its one-dimensional
  kernel/cokernel bases (resonance is required and verified),
* the kernel trajectory S(t) = Phi(t) u and adjoint weight trajectory
  Psi(t) characterizing the image of the difference operator,
* the projections P (onto the operator kernel) and Q (complementary to
  the image), the partial right inverse on Ker(P), and a certified upper
  bound on the sup-norm of the composed operator M_p (I - Q).

Everything is computed once by :func:`analyze` and reused; the returned
:class:`LinearAnalysis` is immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    KernelTooLargeError,
    NotInImageError,
    NotResonantError,
    SingularStepMatrixError,
)
from .problem import GridFunction, ProblemSpec, companion_matrix
from .serialize import format_float

__all__ = [
    "LinearAnalysis",
    "analyze",
    "apply_operator",
    "image_membership",
    "project_kernel",
    "project_cokernel",
    "right_inverse",
    "norm_bound",
    "analysis_report",
]

RANK_TOL = 1e-10
CONDITION_WARN = 1e12
STEP_SINGULAR = 1e14


@dataclass(frozen=True)
class LinearAnalysis:
    """Precomputed linear data; arrays are read-only."""

    n: int
    big_n: int
    rank_tol: float
    fundamental: np.ndarray  # (N+1, n, n), Phi(t)
    fundamental_inv: np.ndarray  # (N+1, n, n), Phi(t)^{-1}
    boundary_map: np.ndarray  # (n, n), Lambda
    kernel_vec: np.ndarray  # (n,), unit basis of Ker(Lambda)
    cokernel_vec: np.ndarray  # (n,), unit basis of Ker(Lambda^T)
    kernel_traj: np.ndarray  # (N+1, n), S(t)
    cokernel_traj: np.ndarray  # (N, n), Psi(t)
    kernel_projector: np.ndarray  # (n, n), orthogonal projector onto Ker(Lambda)
    cokernel_norm_sq: float  # sum_t |Psi(t)|^2
    op_matrix: np.ndarray  # (n(N+1), nN), assembled M_p (I - Q)
    op_norm_bound: float  # certified upper bound on ||M_p (I - Q)||
    op_norm_probe: float  # random-probe lower estimate
    rank_threshold: float
    svd_u: np.ndarray
    svd_sigma: np.ndarray
    svd_vt: np.ndarray
    warnings: tuple[str, ...]

    def __post_init__(self):
        for name in (
            "fundamental",
            "fundamental_inv",
            "boundary_map",
            "kernel_vec",
            "cokernel_vec",
            "kernel_traj",
            "cokernel_traj",
            "kernel_projector",
            "op_matrix",
            "svd_u",
            "svd_sigma",
            "svd_vt",
        ):
            arr = np.ascontiguousarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _first_significant(values: np.ndarray, scale: float) -> float:
    """First entry whose magnitude clears a relative threshold, else 0."""
    thresh = 1e-9 * scale
    for value in values:
        if abs(value) > thresh:
            return float(value)
    return 0.0


def _orient_sign(vec: np.ndarray) -> float:
    lead = _first_significant(vec, float(np.max(np.abs(vec))) or 1.0)
    return -1.0 if lead < 0.0 else 1.0


def analyze(
    spec: ProblemSpec,
    rank_tol: float = RANK_TOL,
    probes: int = 1000,
    probe_seed: int = 0,
) -> LinearAnalysis:
    """Compute the full linear reduction data for a resonant problem.

    The kernel basis is the right singular vector of the boundary map for
    its smallest singular value, sign-normalized so its first significant
    component is positive.  The cokernel basis is sign-normalized so the
    first significant n-th weight component [Psi(t)]_n (scanning t upward)
    is positive, which fixes the orientation of all downstream sign sets.

    Raises NotResonantError / KernelTooLargeError when the kernel of the
    boundary map is not exactly one-dimensional, and
    SingularStepMatrixError when a one-step matrix is numerically singular.
    """
    n, big_n = spec.n, spec.big_n
    warnings: list[str] = []

    phi = np.empty((big_n + 1, n, n))
    phi_inv = np.empty((big_n + 1, n, n))
    phi[0] = np.eye(n)
    phi_inv[0] = np.eye(n)
    for t in range(big_n):
        step = companion_matrix(spec, t)
        cond = np.linalg.cond(step)
        if not np.isfinite(cond) or cond > STEP_SINGULAR:
            raise SingularStepMatrixError(
                f"companion matrix at t={t} is numerically singular"
                f" (a_0(t)={spec.a[0, t]!r})"
            )
        phi[t + 1] = step @ phi[t]
        phi_inv[t + 1] = phi_inv[t] @ np.linalg.inv(step)
    for t in range(big_n + 1):
        cond = np.linalg.norm(phi[t], 2) * np.linalg.norm(phi_inv[t], 2)
        if cond > CONDITION_WARN:
            warnings.append(
                f"fundamental matrix at t={t} has condition {format_float(cond)}"
            )

    terms = [spec.boundary[i] @ phi[i] for i in range(big_n + 1)]
    boundary_map = np.sum(terms, axis=0)
    term_scale = max(float(np.linalg.norm(term, 2)) for term in terms)

    svd_u, sigma, svd_vt = np.linalg.svd(boundary_map)
    # Reference scale includes the summands so that exact resonance produced
    # by cancellation of O(1) terms is still recognized as a zero matrix.
    rank_threshold = rank_tol * max(float(sigma[0]), term_scale)
    small = sigma <= rank_threshold
    kernel_dim = int(np.count_nonzero(small))
    if kernel_dim == 0:
        raise NotResonantError(
            "boundary map is invertible (smallest singular value "
            f"{format_float(sigma[-1])} above threshold "
            f"{format_float(rank_threshold)})"
        )
    if kernel_dim > 1:
        raise KernelTooLargeError(
            f"boundary map kernel has dimension {kernel_dim}; only the "
            "one-dimensional resonant case is supported"
        )

    kernel_vec = svd_vt[-1].copy()
    kernel_vec *= _orient_sign(kernel_vec)
    cokernel_vec = svd_u[:, -1].copy()

    kernel_traj = phi @ kernel_vec
    cokernel_traj = np.empty((big_n, n))
    # Psi^T(t) = (sum_{i>t} w^T B_i Phi(i)) Phi^{-1}(t+1), built by a
    # reverse cumulative sum over the boundary terms.
    acc_row = np.zeros(n)
    for t in range(big_n - 1, -1, -1):
        acc_row = acc_row + cokernel_vec @ terms[t + 1]
        cokernel_traj[t] = acc_row @ phi_inv[t + 1]

    # Orient the cokernel basis by the first significant n-th weight
    # component so the sign-set labels are deterministic.
    scale = float(np.max(np.abs(cokernel_traj))) or 1.0
    lead = _first_significant(cokernel_traj[:, n - 1], scale)
    if lead == 0.0:
        lead = _first_significant(cokernel_traj.ravel(), scale)
    if lead == 0.0:
        lead = _first_significant(cokernel_vec, 1.0)
    if lead < 0.0:
        cokernel_vec = -cokernel_vec
        cokernel_traj = -cokernel_traj

    cokernel_norm_sq = float(np.sum(cokernel_traj * cokernel_traj))
    if cokernel_norm_sq <= 0.0:
        raise NotResonantError(
            "adjoint weight trajectory vanished; boundary conditions are "
            "not independent"
        )

    kernel_projector = np.outer(kernel_vec, kernel_vec)

    partial = _PartialData(
        n=n,
        big_n=big_n,
        phi=phi,
        phi_inv=phi_inv,
        boundary=spec.boundary,
        svd_u=svd_u,
        sigma=sigma,
        svd_vt=svd_vt,
        rank_threshold=rank_threshold,
        cokernel_traj=cokernel_traj,
        cokernel_norm_sq=cokernel_norm_sq,
    )
    op_matrix = _assemble_operator(partial)
    op_norm_bound = _block_row_bound(op_matrix, n, big_n)
    op_norm_probe = _probe_lower_bound(op_matrix, n, big_n, probes, probe_seed)

    return LinearAnalysis(
        n=n,
        big_n=big_n,
        rank_tol=rank_tol,
        fundamental=phi,
        fundamental_inv=phi_inv,
        boundary_map=boundary_map,
        kernel_vec=kernel_vec,
        cokernel_vec=cokernel_vec,
        kernel_traj=kernel_traj,
        cokernel_traj=cokernel_traj,
        kernel_projector=kernel_projector,
        cokernel_norm_sq=cokernel_norm_sq,
        op_matrix=op_matrix,
        op_norm_bound=op_norm_bound,
        op_norm_probe=op_norm_probe,
        rank_threshold=rank_threshold,
        svd_u=svd_u,
        svd_sigma=sigma,
        svd_vt=svd_vt,
        warnings=tuple(warnings),
    )


@dataclass
class _PartialData:
    n: int
    big_n: int
    phi: np.ndarray
    phi_inv: np.ndarray
    boundary: tuple[np.ndarray, ...]
    svd_u: np.ndarray
    sigma: np.ndarray
    svd_vt: np.ndarray
    rank_threshold: float
    cokernel_traj: np.ndarray
    cokernel_norm_sq: float


def _pinv_solve(data, rhs):
    """Minimum-norm least-squares solution of (boundary map) x = rhs."""
    keep = data.sigma > data.rank_threshold
    coeff = data.svd_u.T @ rhs
    x = (data.svd_vt[keep].T * (1.0 / data.sigma[keep])) @ coeff[keep]
    residual = float(np.linalg.norm(data.svd_u[:, ~keep].T @ rhs))
    return x, residual


def _right_inverse_core(data, h_values):
    """Variation-of-parameters solve; returns (x_values, relative residual)."""
    n, big_n = data.n, data.big_n
    csum = np.zeros((big_n + 1, n))
    for i in range(big_n):
        csum[i + 1] = csum[i] + data.phi_inv[i + 1] @ h_values[i]
    rhs = np.zeros(n)
    for i in range(1, big_n + 1):
        rhs -= data.boundary[i] @ data.phi[i] @ csum[i]
    x0, residual = _pinv_solve(data, rhs)
    x_values = np.einsum("tij,tj->ti", data.phi, x0[None, :] + csum)
    rel = residual / (1.0 + float(np.linalg.norm(rhs)))
    return x_values, rel


def _apply_q(data, h_values):
    coeff = float(np.sum(data.cokernel_traj * h_values))
    return data.cokernel_traj * (coeff / data.cokernel_norm_sq)


def _assemble_operator(data):
    n, big_n = data.n, data.big_n
    op = np.empty((n * (big_n + 1), n * big_n))
    basis = np.zeros((big_n, n))
    for s in range(big_n):
        for j in range(n):
            basis[s, j] = 1.0
            h = basis - _apply_q(data, basis)
            x_values, _ = _right_inverse_core(data, h)
            op[:, s * n + j] = x_values.ravel()
            basis[s, j] = 0.0
    return op


def _block_row_bound(op, n, big_n):
    """max over output times of the sum over input times of block norms."""
    best = 0.0
    for t in range(big_n + 1):
        total = 0.0
        rows = op[t * n : (t + 1) * n]
        for s in range(big_n):
            block = rows[:, s * n : (s + 1) * n]
            total += float(np.linalg.norm(block, 2))
        best = max(best, total)
    return best


def _probe_lower_bound(op, n, big_n, probes, seed):
    if probes <= 0:
        return 0.0
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((probes, big_n, n))
    norms = np.linalg.norm(h, axis=2, keepdims=True)
    norms[norms == 0.0] = 1.0
    h /= norms  # each probe has unit sup norm
    images = op @ h.reshape(probes, -1).T
    images = images.T.reshape(probes, big_n + 1, n)
    value = np.max(np.linalg.norm(images, axis=2), axis=1)
    return float(np.max(value))


# ---------------------------------------------------------------------------
# Operator-level API
# ---------------------------------------------------------------------------


def apply_operator(spec: ProblemSpec, x: GridFunction) -> GridFunction:
    """The difference operator: t -> x(t+1) - A(t) x(t), t = 0..N-1."""
    values = x.values
    if values.shape != (spec.big_n + 1, spec.n):
        raise ValueError(
            f"expected grid function on 0..{spec.big_n}, got shape {values.shape}"
        )
    out = np.empty((spec.big_n, spec.n))
    for t in range(spec.big_n):
        out[t] = values[t + 1] - companion_matrix(spec, t) @ values[t]
    return GridFunction(out)


def image_membership(
    la: LinearAnalysis, h: GridFunction, tol: float = 1e-9
) -> tuple[bool, float]:
    """Image test: defect |sum_i Psi^T(i) h(i)| / max(1, ||h||) vs tol."""
    values = h.values
    if values.shape != (la.big_n, la.n):
        raise ValueError("grid function has the wrong shape for the image test")
    raw = float(np.sum(la.cokernel_traj * values))
    defect = abs(raw) / max(1.0, h.norm())
    return defect <= tol, defect


def project_kernel(la: LinearAnalysis, x: GridFunction) -> GridFunction:
    """Projection onto the operator kernel: t -> Phi(t) V x(0)."""
    values = x.values
    if values.shape != (la.big_n + 1, la.n):
        raise ValueError("grid function has the wrong shape for this projection")
    seed = la.kernel_projector @ values[0]
    return GridFunction(la.fundamental @ seed)


def project_cokernel(la: LinearAnalysis, h: GridFunction) -> GridFunction:
    """Projection complementary to the image (rank one, along Psi)."""
    values = h.values
    if values.shape != (la.big_n, la.n):
        raise ValueError("grid function has the wrong shape for this projection")
    coeff = float(np.sum(la.cokernel_traj * values))
    return GridFunction(la.cokernel_traj * (coeff / la.cokernel_norm_sq))


def right_inverse(
    la: LinearAnalysis,
    spec: ProblemSpec,
    h: GridFunction,
    image_tol: float = 1e-8,
) -> GridFunction:
    """Partial right inverse: the unique x with L x = h and P x = 0.

    Requires h in the operator image; raises NotInImageError when the
    least-squares consistency residual exceeds image_tol.
    """
    values = h.values
    if values.shape != (la.big_n, la.n):
        raise ValueError("grid function has the wrong shape for the right inverse")
    data = _data_from_analysis(la, spec)
    x_values, rel = _right_inverse_core(data, values)
    if rel > image_tol:
        raise NotInImageError(
            f"consistency residual {format_float(rel)} exceeds {format_float(image_tol)}"
        )
    return GridFunction(x_values)


def _data_from_analysis(la: LinearAnalysis, spec: ProblemSpec) -> _PartialData:
    return _PartialData(
        n=la.n,
        big_n=la.big_n,
        phi=la.fundamental,
        phi_inv=la.fundamental_inv,
        boundary=spec.boundary,
        svd_u=la.svd_u,
        sigma=la.svd_sigma,
        svd_vt=la.svd_vt,
        rank_threshold=la.rank_threshold,
        cokernel_traj=la.cokernel_traj,
        cokernel_norm_sq=la.cokernel_norm_sq,
    )


def apply_reduced(la: LinearAnalysis, h_values: np.ndarray) -> np.ndarray:
    """Apply the assembled M_p (I - Q) to stacked values of shape (N, n)."""
    flat = la.op_matrix @ np.asarray(h_values, dtype=float).ravel()
    return flat.reshape(la.big_n + 1, la.n)


def norm_bound(
    la: LinearAnalysis, probes: int = 1000, seed: int = 0
) -> tuple[float, float]:
    """Certified upper bound on ||M_p (I - Q)|| plus a probe lower estimate.

    The bound is the block-row bound  max_t sum_s sigma_max(M_{t,s}),
    computed from the assembled operator; it dominates the sup-norm induced
    operator norm.  The second value is the maximum image norm over seeded
    random unit-sup-norm probes, a lower estimate for reporting.
    """
    lower = _probe_lower_bound(la.op_matrix, la.n, la.big_n, probes, seed)
    return la.op_norm_bound, lower


def analysis_report(la: LinearAnalysis) -> dict:
    """JSON-ready report of the linear analysis."""
    return {
        "n": la.n,
        "N": la.big_n,
        "Lambda": la.boundary_map,
        "u": la.kernel_vec,
        "w": la.cokernel_vec,
        "S": la.kernel_traj,
        "Psi": la.cokernel_traj,
        "psi_norm_sq": la.cokernel_norm_sq,
        "A_bar": la.op_norm_bound,
        "A_probe": la.op_norm_probe,
        "rank_threshold": la.rank_threshold,
        "warnings": list(la.warnings),
    }
