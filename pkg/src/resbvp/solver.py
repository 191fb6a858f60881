"""Constructive solution of the reduced system.

A certified problem splits into an auxiliary equation on the complement of
the operator kernel, v = M_p (I - Q) F(alpha S + v), and a scalar
compatibility equation  B(alpha) = sum_i [Psi(i)]_n g(i, ...) = 0.  The
certificate guarantees opposite signs of B at alpha = +/- alpha_cap, where
alpha_cap = (c + A_bar ||g||_d) / s_min, so a sign-change bisection locates
a root; each auxiliary solve is a fixed-point iteration with a damped and
then Newton-polished fallback when the contraction estimate exceeds one.

Everything here is deterministic: fixed starting points, fixed fallback
budgets, no randomness.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conditions import Certificate
from .errors import (
    BisectionStallError,
    BoundarySignViolationError,
    NoConvergenceError,
)
from .expressions import lipschitz_estimate
from .linear import LinearAnalysis
from .problem import (
    GridFunction,
    ProblemSpec,
    ScalarTrajectory,
    scalar_boundary_values,
    scalar_to_grid,
)

__all__ = [
    "BifurcationProblem",
    "AuxSolution",
    "SolveResult",
    "make_bifurcation_problem",
    "auxiliary_fixed_point",
    "bifurcation_value",
    "solve",
    "reduction_residuals",
]

DAMPING = 0.5
PLAIN_BUDGET_FRACTION = 0.4  # portion of max_iter spent before Newton polish


@dataclass(frozen=True)
class BifurcationProblem:
    """Certified problem prepared for the reduced solve."""

    la: LinearAnalysis
    spec: ProblemSpec
    cert: Certificate
    alpha_cap: float  # bracket endpoint (c + A_bar ||g||_d) / s_min
    radius_cap: float  # invariant ball radius A_bar ||g||_d for the iterates
    contraction_q: float  # A_bar times the Lipschitz estimate of g on [-d, d]
    weights_n: np.ndarray  # [Psi(i)]_n, i = 0..N-1
    traj_m: np.ndarray  # [S(i)]_m, i = 0..N-1
    reduced_map: np.ndarray  # (N, N): zeta -> m-th components of M_p(I-Q) embed(zeta)
    lift: np.ndarray  # (n(N+1), N): zeta -> stacked v values
    step_norm: float  # max_t ||A(t)||, used to scale defect tolerances

    def g_at(self, index: int, x: float) -> float:
        return self.spec.g.eval(float(index), float(x))


def make_bifurcation_problem(
    la: LinearAnalysis,
    spec: ProblemSpec,
    cert: Certificate,
    samples: int = 512,
) -> BifurcationProblem:
    """Bundle analysis and certificate; verifies the gap inequality."""
    g_lip = lipschitz_estimate(spec.g, range(spec.big_n), -cert.d, cert.d, samples)
    alpha_cap = (cert.c + la.op_norm_bound * cert.g_sup_d) / cert.s_min
    radius_cap = la.op_norm_bound * cert.g_sup_d
    if alpha_cap * cert.s_max + radius_cap >= cert.d:
        raise ValueError(
            "certificate violates the gap inequality "
            "alpha_cap * s_max + radius_cap < d"
        )
    n, big_n = la.n, la.big_n
    cols = [j * n + (n - 1) for j in range(big_n)]
    lift = np.ascontiguousarray(la.op_matrix[:, cols])
    rows = [i * n + (spec.m - 1) for i in range(big_n)]
    reduced_map = np.ascontiguousarray(lift[rows, :])
    from .problem import companion_matrix

    step_norm = max(
        float(np.linalg.norm(companion_matrix(spec, t), 2)) for t in range(big_n)
    )
    return BifurcationProblem(
        la=la,
        spec=spec,
        cert=cert,
        alpha_cap=alpha_cap,
        radius_cap=radius_cap,
        contraction_q=la.op_norm_bound * g_lip,
        weights_n=la.cokernel_traj[:, n - 1],
        traj_m=la.kernel_traj[:big_n, spec.m - 1],
        reduced_map=reduced_map,
        lift=lift,
        step_norm=step_norm,
    )


@dataclass(frozen=True)
class AuxSolution:
    v: GridFunction
    zeta: np.ndarray  # nonlinearity values generating v through the lift
    iterations: int
    defect: float
    mode: str  # "fixed-point", "damped", or "newton"
    max_norm: float  # largest iterate norm observed
    rates: tuple[float, ...]  # successive defect ratios in plain mode


def _g_vector(bp: BifurcationProblem, args: np.ndarray) -> np.ndarray:
    return np.array(
        [bp.g_at(i, args[i]) for i in range(bp.la.big_n)], dtype=float
    )


def _v_from_zeta(bp: BifurcationProblem, zeta: np.ndarray) -> np.ndarray:
    return (bp.lift @ zeta).reshape(bp.la.big_n + 1, bp.la.n)


def _grid_norm(values: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(values, axis=1))) if values.size else 0.0


def _defect(bp, zeta, g_vals) -> float:
    return _grid_norm(_v_from_zeta(bp, g_vals - zeta))


def auxiliary_fixed_point(
    bp: BifurcationProblem,
    alpha: float,
    tol: float = 1e-12,
    max_iter: int = 400,
    zeta0: np.ndarray | None = None,
) -> AuxSolution:
    """Solve the auxiliary equation at a fixed alpha.

    Iterates v <- M_p (I - Q) F(alpha S + v) from v = 0 (or a warm start),
    in the reduced variable zeta of nonlinearity values (v is the linear
    lift of zeta, so the iterations agree with the v-space ones exactly).
    When the contraction estimate is below one the plain iteration is used
    and its observed rate recorded; otherwise the iteration is damped, and
    if the defect still exceeds tolerance a Newton polish on the reduced
    residual zeta - g(alpha S + G zeta) finishes deterministically.

    Raises NoConvergenceError with the final defect when every stage of
    the budget is exhausted.
    """
    big_n = bp.la.big_n
    args0 = alpha * bp.traj_m
    zeta = np.zeros(big_n) if zeta0 is None else np.asarray(zeta0, dtype=float).copy()
    iterations = 0
    max_norm = 0.0
    rates: list[float] = []

    def current(zeta):
        args = args0 + bp.reduced_map @ zeta
        g_vals = _g_vector(bp, args)
        return args, g_vals

    plain = bp.contraction_q < 1.0
    budget = max_iter if plain else max(int(max_iter * PLAIN_BUDGET_FRACTION), 10)
    mode = "fixed-point" if plain else "damped"
    theta = 1.0 if plain else DAMPING
    prev_defect = None
    args, g_vals = current(zeta)
    for _ in range(budget):
        defect = _defect(bp, zeta, g_vals)
        max_norm = max(max_norm, _grid_norm(_v_from_zeta(bp, zeta)))
        if defect <= tol:
            return AuxSolution(
                v=GridFunction(_v_from_zeta(bp, zeta)),
                zeta=zeta,
                iterations=iterations,
                defect=defect,
                mode=mode,
                max_norm=max_norm,
                rates=tuple(rates),
            )
        if plain and prev_defect is not None and prev_defect > 0.0:
            rates.append(defect / prev_defect)
        prev_defect = defect
        zeta = (1.0 - theta) * zeta + theta * g_vals
        args, g_vals = current(zeta)
        iterations += 1

    if plain:
        defect = _defect(bp, zeta, g_vals)
        raise NoConvergenceError(
            "plain fixed-point iteration exhausted its budget",
            defect=defect,
            iterations=iterations,
        )

    # Newton polish on the reduced residual.
    mode = "newton"
    fd_base = 1e-6
    for _ in range(max_iter - iterations):
        args, g_vals = current(zeta)
        defect = _defect(bp, zeta, g_vals)
        max_norm = max(max_norm, _grid_norm(_v_from_zeta(bp, zeta)))
        if defect <= tol:
            return AuxSolution(
                v=GridFunction(_v_from_zeta(bp, zeta)),
                zeta=zeta,
                iterations=iterations,
                defect=defect,
                mode=mode,
                max_norm=max_norm,
                rates=tuple(rates),
            )
        residual = zeta - g_vals
        slopes = np.empty(big_n)
        for i in range(big_n):
            h = fd_base * (1.0 + abs(args[i]))
            slopes[i] = (bp.g_at(i, args[i] + h) - bp.g_at(i, args[i] - h)) / (2.0 * h)
        jac = np.eye(big_n) - slopes[:, None] * bp.reduced_map
        try:
            step = np.linalg.solve(jac, -residual)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(jac, -residual, rcond=None)[0]
        base = float(residual @ residual)
        lam = 1.0
        while lam > 1e-12:
            trial = zeta + lam * step
            _, g_trial = current(trial)
            value = trial - g_trial
            if float(value @ value) <= (1.0 - 1e-4 * lam) * base:
                break
            lam *= 0.5
        zeta = zeta + lam * step
        iterations += 1

    args, g_vals = current(zeta)
    defect = _defect(bp, zeta, g_vals)
    raise NoConvergenceError(
        "auxiliary iteration failed to converge",
        defect=defect,
        iterations=iterations,
    )


def _bif_value(bp: BifurcationProblem, alpha: float, zeta: np.ndarray) -> float:
    args = alpha * bp.traj_m + bp.reduced_map @ zeta
    return float(sum(bp.weights_n[i] * bp.g_at(i, args[i]) for i in range(bp.la.big_n)))


def bifurcation_value(
    bp: BifurcationProblem,
    alpha: float,
    tol: float = 1e-12,
    max_iter: int = 400,
) -> float:
    """B(alpha), with the auxiliary equation solved fresh from v = 0."""
    aux = auxiliary_fixed_point(bp, alpha, tol=tol, max_iter=max_iter)
    return _bif_value(bp, alpha, aux.zeta)


@dataclass(frozen=True)
class SolveResult:
    alpha: float
    v: GridFunction
    x: GridFunction
    y: ScalarTrajectory
    recurrence_residual: float
    boundary_residual: float
    aux_iterations: int
    bisection_steps: int
    bracket: tuple[float, float, float, float]  # (alpha_lo, alpha_hi, B_lo, B_hi)
    history: tuple[tuple[float, float], ...]  # evaluated (alpha, B) pairs
    success: bool
    overlap_mismatch: float


def _scalar_residuals(spec: ProblemSpec, y: np.ndarray) -> tuple[float, float]:
    worst = 0.0
    for t in range(spec.big_n):
        value = y[t + spec.n] + float(spec.a[:, t] @ y[t : t + spec.n])
        value -= spec.g_value(t, y[t + spec.m - 1])
        worst = max(worst, abs(value))
    boundary = scalar_boundary_values(spec, ScalarTrajectory(y))
    return worst, float(np.max(np.abs(boundary)))


def _assemble(bp, alpha, zeta, aux_total, steps, bracket, history, solve_tol):
    v_values = _v_from_zeta(bp, zeta)
    x_values = alpha * bp.la.kernel_traj + v_values
    n, big_n = bp.la.n, bp.la.big_n
    y = np.concatenate([x_values[:, 0], x_values[big_n, 1:]])
    mismatch = 0.0
    if n > 1:
        mismatch = float(np.max(np.abs(x_values[1:, : n - 1] - x_values[:-1, 1:])))
    rec_res, bnd_res = _scalar_residuals(bp.spec, y)
    return SolveResult(
        alpha=float(alpha),
        v=GridFunction(v_values),
        x=GridFunction(x_values),
        y=ScalarTrajectory(y),
        recurrence_residual=rec_res,
        boundary_residual=bnd_res,
        aux_iterations=aux_total,
        bisection_steps=steps,
        bracket=bracket,
        history=tuple(history),
        success=(rec_res <= solve_tol and bnd_res <= solve_tol),
        overlap_mismatch=mismatch,
    )


def solve(
    bp: BifurcationProblem,
    solve_tol: float = 1e-10,
    max_bisect: int = 200,
    aux_max_iter: int = 400,
) -> SolveResult:
    """Bisect the bifurcation value between the certified endpoints.

    Endpoint evaluations use alpha = +/- alpha_cap exactly with fresh
    auxiliary starts; interior evaluations reuse the previous auxiliary
    solution as a warm start.  Success requires the assembled trajectory to
    satisfy the scalar recurrence and all boundary sums within solve_tol.
    """
    weight_mass = float(np.sum(np.abs(bp.weights_n)))
    btol = solve_tol * (1.0 + weight_mass * bp.cert.g_sup_d)
    aux_tol = min(1e-12 * (1.0 + bp.radius_cap), solve_tol / (10.0 * (1.0 + bp.step_norm)))

    aux_total = 0
    history: list[tuple[float, float]] = []

    def evaluate(alpha, zeta0=None):
        nonlocal aux_total
        try:
            aux = auxiliary_fixed_point(
                bp, alpha, tol=aux_tol, max_iter=aux_max_iter, zeta0=zeta0
            )
        except NoConvergenceError:
            if zeta0 is None:
                raise
            # The warm branch may have folded away at this alpha; fall back
            # to the canonical start.
            aux = auxiliary_fixed_point(bp, alpha, tol=aux_tol, max_iter=aux_max_iter)
        aux_total += aux.iterations
        value = _bif_value(bp, alpha, aux.zeta)
        history.append((float(alpha), value))
        return value, aux.zeta

    hi_alpha = bp.alpha_cap
    lo_alpha = -bp.alpha_cap
    b_hi, zeta_hi = evaluate(hi_alpha)
    b_lo, zeta_lo = evaluate(lo_alpha)
    bracket = (lo_alpha, hi_alpha, b_lo, b_hi)

    if bp.cert.orientation == "standard":
        signs_ok = b_hi > 0.0 and b_lo < 0.0
    else:
        signs_ok = b_hi < 0.0 and b_lo > 0.0

    if not signs_ok:
        if abs(b_hi) <= btol and abs(b_lo) <= btol:
            # Degenerate compatibility map; accept the centre if it is a root.
            b_mid, zeta_mid = evaluate(0.0)
            if abs(b_mid) <= btol:
                return _assemble(
                    bp, 0.0, zeta_mid, aux_total, 0, bracket, history, solve_tol
                )
        raise BoundarySignViolationError(b_lo, b_hi)

    if bp.cert.orientation == "standard":
        neg_alpha, neg_zeta, pos_alpha, pos_zeta = lo_alpha, zeta_lo, hi_alpha, zeta_hi
        b_neg, b_pos = b_lo, b_hi
    else:
        neg_alpha, neg_zeta, pos_alpha, pos_zeta = hi_alpha, zeta_hi, lo_alpha, zeta_lo
        b_neg, b_pos = b_hi, b_lo

    def current_bracket():
        if neg_alpha < pos_alpha:
            return (neg_alpha, pos_alpha, b_neg, b_pos)
        return (pos_alpha, neg_alpha, b_pos, b_neg)

    # A value below the compatibility threshold nominates a candidate; it is
    # accepted once the assembled trajectory meets the residual tolerance,
    # otherwise bisection keeps narrowing toward the width floor.
    best = None
    best_abs = np.inf
    for alpha, zeta, value in (
        (neg_alpha, neg_zeta, b_neg),
        (pos_alpha, pos_zeta, b_pos),
    ):
        if abs(value) <= btol:
            candidate = _assemble(
                bp, alpha, zeta, aux_total, 0, current_bracket(), history, solve_tol
            )
            if candidate.success:
                return candidate
            if abs(value) < best_abs:
                best, best_abs = candidate, abs(value)

    warm = pos_zeta
    steps = 0
    while steps < max_bisect:
        if abs(pos_alpha - neg_alpha) < 1e-14 * bp.alpha_cap:
            if best is not None:
                return best
            # Without a contraction the warm-started branch can jump across
            # the root; retry the collapsed midpoint from a fresh start
            # before giving up.
            mid = 0.5 * (neg_alpha + pos_alpha)
            b_mid, zeta_mid = evaluate(mid)
            if abs(b_mid) <= btol:
                return _assemble(
                    bp, mid, zeta_mid, aux_total, steps,
                    current_bracket(), history, solve_tol,
                )
            raise BisectionStallError(
                f"bracket collapsed at alpha={neg_alpha!r} with |B| above tolerance"
            )
        mid = 0.5 * (neg_alpha + pos_alpha)
        b_mid, zeta_mid = evaluate(mid, zeta0=warm)
        warm = zeta_mid
        steps += 1
        if abs(b_mid) <= btol:
            candidate = _assemble(
                bp, mid, zeta_mid, aux_total, steps, current_bracket(), history, solve_tol
            )
            if candidate.success:
                return candidate
            if abs(b_mid) < best_abs:
                best, best_abs = candidate, abs(b_mid)
        if b_mid > 0.0:
            pos_alpha, b_pos = mid, b_mid
        else:
            neg_alpha, b_neg = mid, b_mid
    if best is not None:
        return best
    raise BisectionStallError(f"no root located within {max_bisect} bisection steps")


def reduction_residuals(
    la: LinearAnalysis, spec: ProblemSpec, y: ScalarTrajectory
) -> tuple[float, float]:
    """Residuals of the two reduced equations at a scalar trajectory.

    Returns (auxiliary residual ||(x - Px) - M_p(I-Q)F(x)||, compatibility
    residual |sum_i [Psi(i)]_n g(i, [x(i)]_m)|) for x the windowed state.
    """
    x = scalar_to_grid(y, spec)
    values = x.values
    n, big_n = la.n, la.big_n
    f_vals = np.zeros((big_n, n))
    for t in range(big_n):
        f_vals[t, n - 1] = spec.g_value(t, values[t, spec.m - 1])
    reduced = (la.op_matrix @ f_vals.ravel()).reshape(big_n + 1, n)
    kernel_part = la.fundamental @ (la.kernel_projector @ values[0])
    aux_res = _grid_norm(values - kernel_part - reduced)
    bif_res = abs(
        float(
            sum(
                la.cokernel_traj[t, n - 1] * f_vals[t, n - 1]
                for t in range(big_n)
            )
        )
    )
    return aux_res, bif_res
