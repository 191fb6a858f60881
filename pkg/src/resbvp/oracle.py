"""Independent brute-force verification.

The full nonlinear system stacks the N scalar recurrence equations and the
n boundary sums into a square map on the N+n scalar unknowns; a damped
Newton with Armijo backtracking solves it directly, with no reliance on
the reduction machinery.  The same assembly with the nonlinearity dropped
gives the linear problem whose nullity cross-checks the kernel dimension
of the boundary map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problem import GridFunction, ProblemSpec, ScalarTrajectory, full_row_rank
from .linear import analyze

__all__ = [
    "FullSystem",
    "build_full_system",
    "newton_solve",
    "NewtonRun",
    "multistart",
    "MultistartResult",
    "linear_nullity",
    "random_resonant_spec",
]

RANK_TOL = 1e-10
FD_STEP = 1e-6


@dataclass(frozen=True)
class FullSystem:
    """Residual map and Jacobian of the stacked scalar system."""

    spec: ProblemSpec

    @property
    def dim(self) -> int:
        return self.spec.big_n + self.spec.n

    def residual(self, y: np.ndarray) -> np.ndarray:
        spec = self.spec
        y = np.asarray(y, dtype=float)
        out = np.empty(self.dim)
        for t in range(spec.big_n):
            out[t] = (
                y[t + spec.n]
                + float(spec.a[:, t] @ y[t : t + spec.n])
                - spec.g_value(t, y[t + spec.m - 1])
            )
        out[spec.big_n :] = 0.0
        for k, mat in enumerate(spec.boundary):
            out[spec.big_n :] += mat @ y[k : k + spec.n]
        return out

    def jacobian(self, y: np.ndarray) -> np.ndarray:
        """Analytic in the linear part, central differences in g."""
        spec = self.spec
        y = np.asarray(y, dtype=float)
        jac = np.zeros((self.dim, self.dim))
        for t in range(spec.big_n):
            jac[t, t : t + spec.n] = spec.a[:, t]
            jac[t, t + spec.n] += 1.0
            arg = y[t + spec.m - 1]
            h = FD_STEP * (1.0 + abs(arg))
            slope = (spec.g_value(t, arg + h) - spec.g_value(t, arg - h)) / (2.0 * h)
            jac[t, t + spec.m - 1] -= slope
        for k, mat in enumerate(spec.boundary):
            jac[spec.big_n :, k : k + spec.n] += mat
        return jac


def build_full_system(spec: ProblemSpec) -> FullSystem:
    return FullSystem(spec)


@dataclass(frozen=True)
class NewtonRun:
    y: ScalarTrajectory | None
    iterations: int
    residual_norm: float
    converged: bool


def newton_solve(
    fs: FullSystem,
    y0,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> NewtonRun:
    """Damped Newton with Armijo backtracking on the squared residual.

    Returns a non-converged run (y None) on stall or iteration cap; a
    singular Jacobian falls back to a least-squares step.
    """
    y = np.asarray(y0, dtype=float).copy()
    if y.shape != (fs.dim,):
        raise ValueError(f"start vector must have length {fs.dim}")
    res = fs.residual(y)
    merit = float(res @ res)
    for iteration in range(max_iter):
        norm = float(np.max(np.abs(res)))
        if norm <= tol:
            return NewtonRun(
                y=ScalarTrajectory(y),
                iterations=iteration,
                residual_norm=norm,
                converged=True,
            )
        jac = fs.jacobian(y)
        try:
            step = np.linalg.solve(jac, -res)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -res, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            break
        lam = 1.0
        accepted = False
        while lam >= 1e-12:
            trial = y + lam * step
            trial_res = fs.residual(trial)
            trial_merit = float(trial_res @ trial_res)
            if trial_merit <= (1.0 - 2e-4 * lam) * merit:
                y, res, merit = trial, trial_res, trial_merit
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            break
    norm = float(np.max(np.abs(res)))
    if norm <= tol:
        return NewtonRun(
            y=ScalarTrajectory(y),
            iterations=max_iter,
            residual_norm=norm,
            converged=True,
        )
    return NewtonRun(y=None, iterations=max_iter, residual_norm=norm, converged=False)


@dataclass(frozen=True)
class MultistartResult:
    solutions: tuple[ScalarTrajectory, ...]
    start_indices: tuple[int, ...]
    iterations: tuple[int, ...]
    residuals: tuple[float, ...]
    attempts: int


def multistart(
    fs: FullSystem,
    k: int,
    box_radius: float,
    seed: int,
    tol: float = 1e-10,
    max_iter: int = 60,
) -> MultistartResult:
    """K seeded Newton runs from uniform starts, deduplicated solutions.

    Solutions closer than 1e-6 * (1 + scale) in the sup norm are considered
    equal; merging follows start order, so output is seed-reproducible.
    """
    if k < 1:
        raise ValueError("need at least one start")
    rng = np.random.default_rng(seed)
    starts = rng.uniform(-box_radius, box_radius, size=(k, fs.dim))
    solutions: list[np.ndarray] = []
    start_indices: list[int] = []
    iterations: list[int] = []
    residuals: list[float] = []
    for index in range(k):
        run = newton_solve(fs, starts[index], tol=tol, max_iter=max_iter)
        if not run.converged:
            continue
        y = run.y.y
        duplicate = False
        for kept in solutions:
            scale = 1.0 + max(
                float(np.max(np.abs(kept))), float(np.max(np.abs(y)))
            )
            if float(np.max(np.abs(kept - y))) <= 1e-6 * scale:
                duplicate = True
                break
        if duplicate:
            continue
        solutions.append(y)
        start_indices.append(index)
        iterations.append(run.iterations)
        residuals.append(run.residual_norm)
    return MultistartResult(
        solutions=tuple(ScalarTrajectory(y) for y in solutions),
        start_indices=tuple(start_indices),
        iterations=tuple(iterations),
        residuals=tuple(residuals),
        attempts=k,
    )


def linear_nullity(
    spec: ProblemSpec, rank_tol: float = RANK_TOL
) -> tuple[int, np.ndarray]:
    """Nullity and orthonormal null basis of the assembled linear problem.

    The nonlinearity is ignored; rows are the homogeneous recurrence
    equations plus the boundary sums, an (N+n) x (N+n) matrix.
    """
    dim = spec.big_n + spec.n
    mat = np.zeros((dim, dim))
    for t in range(spec.big_n):
        mat[t, t : t + spec.n] = spec.a[:, t]
        mat[t, t + spec.n] += 1.0
    for k, bmat in enumerate(spec.boundary):
        mat[spec.big_n :, k : k + spec.n] += bmat
    sigma = np.linalg.svd(mat, compute_uv=False)
    _, _, vt = np.linalg.svd(mat)
    threshold = rank_tol * (sigma[0] if sigma[0] > 0.0 else 1.0)
    nullity = int(np.count_nonzero(sigma <= threshold))
    basis = vt[dim - nullity :].T if nullity else np.zeros((dim, 0))
    return nullity, basis


# ---------------------------------------------------------------------------
# Random resonant instances for the property suites
# ---------------------------------------------------------------------------


def _stable_coefficients(rng, n):
    """Base recurrence coefficients with well-separated near-unit roots.

    Products of fully independent random companion matrices grow
    exponentially (positive Lyapunov exponent), which would wreck the
    tight projection-identity tolerances; a constant base with separated
    roots in a thin annulus plus a small per-step jitter keeps every
    |a_0(t)| inside [0.5, 2] and the fundamental matrices well
    conditioned.
    """
    while True:
        roots: list[complex] = []
        remaining = n
        while remaining > 0:
            radius = rng.uniform(0.93, 1.04)
            if remaining >= 2 and rng.uniform() < 0.5:
                angle = rng.uniform(0.3, np.pi - 0.3)
                roots.extend(
                    [radius * np.exp(1j * angle), radius * np.exp(-1j * angle)]
                )
                remaining -= 2
            else:
                roots.append(radius if rng.uniform() < 0.5 else -radius)
                remaining -= 1
        arr = np.array(roots)
        separated = all(
            abs(arr[i] - arr[j]) >= 0.3
            for i in range(n)
            for j in range(i + 1, n)
        )
        if separated:
            poly = np.real(np.poly(arr))  # [1, c_{n-1}, ..., c_0]
            return poly[1:][::-1]  # a_j multiplies y(t+j), j = 0..n-1


def random_resonant_spec(
    n: int,
    big_n: int,
    seed: int | np.random.Generator,
    m: int | None = None,
    g_text: str = "0",
    max_attempts: int = 200,
) -> ProblemSpec:
    """A random instance whose boundary map has a one-dimensional kernel.

    Boundary matrices B_0..B_{N-1} are random; B_N is chosen so that the
    boundary map equals a prescribed rank-(n-1) target, which forces
    resonance.  Draws failing the row-rank or conditioning guards are
    resampled.
    """
    rng = (
        seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    )
    from .expressions import parse
    from .problem import companion_matrix as _companion

    g = parse(g_text)
    m_choice = m
    for _ in range(max_attempts):
        base = _stable_coefficients(rng, n)
        jitter = 1.0 + rng.uniform(-0.01, 0.01, size=(n, big_n))
        coeff = base[:, None] * jitter
        lag = m_choice if m_choice is not None else int(rng.integers(1, n + 1))

        # fundamental matrices with a conditioning guard
        phi = [np.eye(n)]
        ok = True
        for t in range(big_n):
            step = np.zeros((n, n))
            if n > 1:
                step[: n - 1, 1:] = np.eye(n - 1)
            step[n - 1, :] = -coeff[:, t]
            phi.append(step @ phi[-1])
        for mat in phi:
            sig = np.linalg.svd(mat, compute_uv=False)
            if sig[0] > 10.0 or sig[-1] < 0.1:
                ok = False
                break
        if not ok:
            continue

        boundary = [rng.standard_normal((n, n)) for _ in range(big_n)]
        if n == 1:
            target = np.zeros((1, 1))
        else:
            w_mat, _ = np.linalg.qr(rng.standard_normal((n, n)))
            v_mat, _ = np.linalg.qr(rng.standard_normal((n, n)))
            sigma = np.concatenate([rng.uniform(0.5, 2.0, size=n - 1), [0.0]])
            target = w_mat @ np.diag(sigma) @ v_mat.T
        partial = sum(boundary[i] @ phi[i] for i in range(big_n))
        last = (target - partial) @ np.linalg.inv(phi[big_n])
        boundary.append(last)
        if not full_row_rank(np.hstack(boundary)):
            continue
        try:
            spec = ProblemSpec(
                n=n,
                big_n=big_n,
                m=lag,
                a=coeff,
                boundary=tuple(boundary),
                g=g,
                g_text=g_text,
            )
            analyze(spec, probes=0)
        except Exception:
            continue
        return spec
    raise RuntimeError(
        f"failed to generate a resonant instance after {max_attempts} attempts"
    )
