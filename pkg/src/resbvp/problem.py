"""Problem model: scalar recurrence, multipoint boundary data, grid functions.

The scalar problem of order n on horizon N couples

    y(t+n) + a_{n-1}(t) y(t+n-1) + ... + a_0(t) y(t) = g(t, y(t+m-1)),
    t = 0..N-1,

with n homogeneous multipoint boundary conditions encoded by n x n
matrices B_0..B_N acting on the state windows x(k) = (y(k), ..., y(k+n-1)).
All time indices are 0-based; the component index m is 1-based (1 <= m <= n).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ProblemFormatError
from .expressions import Expr, parse, to_text
from .serialize import canonical_json

__all__ = [
    "ProblemSpec",
    "GridFunction",
    "ScalarTrajectory",
    "companion_matrix",
    "to_companion",
    "scalar_to_grid",
    "grid_to_scalar",
    "boundary_map_value",
    "scalar_boundary_values",
    "full_row_rank",
    "load_problem",
    "loads_problem",
    "problem_to_json",
    "save_problem",
]

RANK_TOL = 1e-10


def full_row_rank(matrix: np.ndarray, rank_tol: float = RANK_TOL) -> bool:
    """Whether a wide matrix has full row rank under the SVD threshold.

    Rank deficiency is declared when a singular value falls below
    rank_tol * sigma_max, which is invariant under uniform row scaling.
    """
    matrix = np.asarray(matrix, dtype=float)
    sigma = np.linalg.svd(matrix, compute_uv=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        return matrix.shape[0] == 0
    return bool(sigma[min(matrix.shape) - 1] > rank_tol * sigma[0]) and matrix.shape[
        0
    ] <= matrix.shape[1]


@dataclass(frozen=True)
class GridFunction:
    """Vector-valued sequence on {0..L-1} with the sup-of-Euclidean norm."""

    values: np.ndarray  # shape (L, n)

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if values.ndim != 2:
            raise ValueError("grid function values must be a 2-d array")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def domain_len(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def norm(self) -> float:
        """sup over t of the Euclidean norm of the value at t."""
        if self.values.size == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def __add__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        return GridFunction(self.values - other.values)

    def __rmul__(self, scalar: float) -> "GridFunction":
        return GridFunction(float(scalar) * self.values)


@dataclass(frozen=True)
class ScalarTrajectory:
    """Scalar sequence y(0..N+n-1)."""

    y: np.ndarray

    def __post_init__(self):
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float))
        if y.ndim != 1:
            raise ValueError("trajectory must be a 1-d array")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable problem description.

    Fields:
        n: recurrence order (>= 1).
        big_n: horizon N (>= 3).
        m: 1-based lag index of the nonlinearity argument (1 <= m <= n).
        a: coefficient table, shape (n, N); a[j, t] multiplies y(t+j).
        boundary: tuple of N+1 matrices, each n x n.
        g: nonlinearity AST (variables t and x).
    """

    n: int
    big_n: int
    m: int
    a: np.ndarray
    boundary: tuple[np.ndarray, ...]
    g: Expr
    g_text: str = field(default="", compare=False)

    def __post_init__(self):
        n, big_n, m = self.n, self.big_n, self.m
        if n < 1:
            raise ProblemFormatError("order n must be at least 1")
        if big_n < 3:
            raise ProblemFormatError("horizon N must be an integer greater than 2")
        if not 1 <= m <= n:
            raise ProblemFormatError("lag index m must satisfy 1 <= m <= n")
        a = np.ascontiguousarray(np.asarray(self.a, dtype=float))
        if a.shape != (n, big_n):
            raise ProblemFormatError(
                f"coefficient table must have shape ({n}, {big_n}), got {a.shape}"
            )
        if np.any(a[0] == 0.0):
            raise ProblemFormatError("a_0(t) must be nonzero for every t")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        if len(self.boundary) != big_n + 1:
            raise ProblemFormatError(f"need {big_n + 1} boundary matrices")
        mats = []
        for k, mat in enumerate(self.boundary):
            mat = np.ascontiguousarray(np.asarray(mat, dtype=float))
            if mat.shape != (n, n):
                raise ProblemFormatError(
                    f"boundary matrix {k} must be {n} x {n}, got {mat.shape}"
                )
            mat.setflags(write=False)
            mats.append(mat)
        object.__setattr__(self, "boundary", tuple(mats))
        stacked = np.hstack(mats)
        if not full_row_rank(stacked):
            raise ProblemFormatError(
                "augmented boundary matrix [B_0, ..., B_N] must have full row rank"
            )
        if not self.g_text:
            object.__setattr__(self, "g_text", to_text(self.g))

    def g_value(self, t: int, x: float) -> float:
        """Evaluate the nonlinearity at an integer time in {0..N-1}."""
        ti = int(t)
        if ti != t:
            raise ValueError("nonlinearity is only evaluated at integer times")
        if not 0 <= ti <= self.big_n - 1:
            raise IndexError(f"time index {ti} outside 0..{self.big_n - 1}")
        return self.g.eval(float(ti), float(x))


def companion_matrix(spec: ProblemSpec, t: int) -> np.ndarray:
    """One-step companion matrix A(t) of the homogeneous recurrence."""
    if not 0 <= t <= spec.big_n - 1:
        raise IndexError(f"time index {t} outside 0..{spec.big_n - 1}")
    n = spec.n
    mat = np.zeros((n, n))
    if n > 1:
        mat[: n - 1, 1:] = np.eye(n - 1)
    mat[n - 1, :] = -spec.a[:, t]
    return mat


def to_companion(spec: ProblemSpec, t: int, x: np.ndarray) -> np.ndarray:
    """One step of the companion system: A(t) x + (0, ..., 0, g(t, x_m))."""
    x = np.asarray(x, dtype=float)
    if x.shape != (spec.n,):
        raise ValueError(f"state must have dimension {spec.n}")
    out = companion_matrix(spec, t) @ x
    out[spec.n - 1] += spec.g_value(t, x[spec.m - 1])
    return out


def scalar_to_grid(y: ScalarTrajectory | np.ndarray, spec: ProblemSpec) -> GridFunction:
    """Window a scalar trajectory into states x(t) = (y(t), ..., y(t+n-1))."""
    arr = y.y if isinstance(y, ScalarTrajectory) else np.asarray(y, dtype=float)
    expected = spec.big_n + spec.n
    if arr.shape != (expected,):
        raise ValueError(f"trajectory must have length {expected}, got {arr.shape}")
    idx = np.arange(spec.big_n + 1)[:, None] + np.arange(spec.n)[None, :]
    return GridFunction(arr[idx])


def grid_to_scalar(
    x: GridFunction, spec: ProblemSpec, overlap_tol: float = 1e-9
) -> ScalarTrajectory:
    """Invert the windowing; fails if the sliding-window overlaps disagree.

    Requires x(t+1)_j = x(t)_{j+1} for j = 1..n-1 (1-based) up to
    overlap_tol relative to the trajectory scale.
    """
    values = x.values
    if values.shape != (spec.big_n + 1, spec.n):
        raise ValueError(
            f"grid function must have shape ({spec.big_n + 1}, {spec.n}),"
            f" got {values.shape}"
        )
    if spec.n > 1:
        mismatch = np.abs(values[1:, : spec.n - 1] - values[:-1, 1:])
        scale = 1.0 + np.max(np.abs(values))
        worst = float(np.max(mismatch)) if mismatch.size else 0.0
        if worst > overlap_tol * scale:
            raise ValueError(
                "grid function is not a windowed scalar trajectory "
                f"(overlap mismatch {worst:.3e})"
            )
    y = np.concatenate([values[:, 0], values[-1, 1:]])
    return ScalarTrajectory(y)


def boundary_space_projection(spec: ProblemSpec, x: GridFunction) -> GridFunction:
    """Orthogonal projection onto the subspace satisfying the boundary sums.

    The difference operator of the theory acts on that subspace; random
    test functions must be projected into it before image arguments apply.
    """
    if x.values.shape != (spec.big_n + 1, spec.n):
        raise ValueError("grid function has the wrong shape for this problem")
    constraint = np.hstack(spec.boundary)  # n x n(N+1), full row rank
    flat = x.values.ravel()
    correction, *_ = np.linalg.lstsq(constraint, constraint @ flat, rcond=None)
    return GridFunction((flat - correction).reshape(spec.big_n + 1, spec.n))


def boundary_map_value(spec: ProblemSpec, x: GridFunction) -> np.ndarray:
    """Boundary functional sum_k B_k x(k) as an n-vector."""
    if x.values.shape != (spec.big_n + 1, spec.n):
        raise ValueError("grid function has the wrong shape for this problem")
    out = np.zeros(spec.n)
    for k, mat in enumerate(spec.boundary):
        out += mat @ x.values[k]
    return out


def scalar_boundary_values(spec: ProblemSpec, y: ScalarTrajectory) -> np.ndarray:
    """The n scalar boundary sums sum_k sum_j b_ij(k) y(j+k-1) (1-based j)."""
    arr = y.y if isinstance(y, ScalarTrajectory) else np.asarray(y, dtype=float)
    out = np.zeros(spec.n)
    for k, mat in enumerate(spec.boundary):
        out += mat @ arr[k : k + spec.n]
    return out


# ---------------------------------------------------------------------------
# Problem documents
# ---------------------------------------------------------------------------


def _coefficients_from_json(raw, n, big_n):
    if not isinstance(raw, list) or len(raw) != n:
        raise ProblemFormatError(f"'a' must be a list of {n} coefficient rows")
    table = np.zeros((n, big_n))
    for j, row in enumerate(raw):
        if isinstance(row, (int, float)):
            table[j, :] = float(row)  # scalar broadcasts to constant-in-t
        elif isinstance(row, list) and len(row) == big_n:
            table[j, :] = [float(v) for v in row]
        else:
            raise ProblemFormatError(
                f"'a[{j}]' must be a scalar or a list of length {big_n}"
            )
    return table


def loads_problem(text: str) -> ProblemSpec:
    """Parse a problem document from JSON text."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem document must be a JSON object")
    missing = [key for key in ("n", "N", "m", "a", "B", "g") if key not in doc]
    if missing:
        raise ProblemFormatError(f"missing problem fields: {', '.join(missing)}")
    try:
        n = int(doc["n"])
        big_n = int(doc["N"])
        m = int(doc["m"])
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError("n, N, m must be integers") from exc
    a = _coefficients_from_json(doc["a"], n, big_n)
    raw_b = doc["B"]
    if not isinstance(raw_b, list) or len(raw_b) != big_n + 1:
        raise ProblemFormatError(f"'B' must be a list of {big_n + 1} matrices")
    boundary = []
    for k, mat in enumerate(raw_b):
        arr = np.asarray(mat, dtype=float)
        if arr.shape != (n, n):
            raise ProblemFormatError(f"'B[{k}]' must be an {n} x {n} matrix")
        boundary.append(arr)
    g_text = doc["g"]
    if not isinstance(g_text, str):
        raise ProblemFormatError("'g' must be an expression string")
    g = parse(g_text)
    return ProblemSpec(
        n=n, big_n=big_n, m=m, a=a, boundary=tuple(boundary), g=g, g_text=g_text
    )


def load_problem(path) -> ProblemSpec:
    """Load a problem document from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        return loads_problem(fh.read())


def problem_to_json(spec: ProblemSpec) -> str:
    """Serialize a problem so numeric fields round-trip bit-exactly."""
    doc = {
        "n": spec.n,
        "N": spec.big_n,
        "m": spec.m,
        "a": [list(row) for row in spec.a],
        "B": [mat.tolist() for mat in spec.boundary],
        "g": spec.g_text,
    }
    return canonical_json(doc)


def save_problem(spec: ProblemSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(problem_to_json(spec))
