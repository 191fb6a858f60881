"""Built-in demonstration problem with known reduction data.

The problem is  y(t+2) + y(t+1) + y(t) = g(y(t+1))  on horizon N = 8 with
the two multipoint conditions  y(5) + y(8) + y(9) = 0  and
y(2) + y(8) + y(9) = 0.  Its boundary map, kernel trajectory, adjoint
weights and sign sets are known in closed form and serve as golden values
for the analysis pipeline; a logarithmic band nonlinearity built from the
computed operator-norm bound exercises the certification and solve paths
end to end.
"""

from __future__ import annotations

import math

import numpy as np

from .conditions import sign_sets
from .linear import LinearAnalysis, analyze
from .problem import ProblemSpec
from .expressions import parse
from .serialize import format_float

__all__ = [
    "reference_problem",
    "GOLDEN_BOUNDARY_MAP",
    "GOLDEN_KERNEL_TABLE",
    "GOLDEN_WEIGHT_TABLE",
    "GOLDEN_SIGNS",
    "log_band_text",
    "choose_growth_rate",
    "reference_certified_problem",
]

# Exact reduction data for the demonstration problem, expressed in the
# integer basis pair (2, -1) / (-1, 1); computed values agree after a
# positive rescaling of each basis vector.
GOLDEN_BOUNDARY_MAP = np.array([[-1.0, -2.0], [-1.0, -2.0]])
GOLDEN_KERNEL_TABLE = np.array(
    [[2.0, -1.0], [-1.0, -1.0], [-1.0, 2.0]] * 3
)  # S(t), t = 0..8, period 3
GOLDEN_WEIGHT_TABLE = np.array(
    [
        [0.0, 0.0],
        [0.0, 0.0],
        [1.0, 1.0],
        [0.0, -1.0],
        [-1.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
    ]
)  # Psi(t), t = 0..7
GOLDEN_SIGNS = {"pp": {2}, "pm": set(), "mp": set(), "mm": {3}, "zero": set()}


def reference_problem(g_text: str = "0") -> ProblemSpec:
    """The demonstration problem with an arbitrary nonlinearity."""
    big_n = 8
    boundary = [np.zeros((2, 2)) for _ in range(big_n + 1)]
    boundary[2] = np.array([[0.0, 0.0], [1.0, 0.0]])
    boundary[5] = np.array([[1.0, 0.0], [0.0, 0.0]])
    boundary[8] = np.array([[1.0, 1.0], [1.0, 1.0]])
    return ProblemSpec(
        n=2,
        big_n=big_n,
        m=2,
        a=np.ones((2, big_n)),
        boundary=tuple(boundary),
        g=parse(g_text),
        g_text=g_text,
    )


def log_band_text(gamma: float, beta: float) -> str:
    """Logarithmic band nonlinearity, positive on both half-lines.

    Grows like gamma*ln(1+x) for x >= 0 and beta*ln(1+|x|) for x < 0; both
    ends diverge to +infinity, so no limit-type criterion applies, yet the
    band conditions hold on [c, d] x [-d, -c] for suitable c < d.
    """
    return (
        f"if(x >= 0, {format_float(gamma)} * ln(1 + x), "
        f"{format_float(beta)} * ln(1 + abs(x)))"
    )


def choose_growth_rate(
    la: LinearAnalysis,
    structure: ProblemSpec,
    c: float = 3.0,
    margin: float = 1.2,
    step: float = 0.25,
    cap: float = 40.0,
) -> tuple[float, float]:
    """Smallest growth rate gamma (on a fixed grid) passing the gap check.

    Requires gamma > ln(1+c)/(ln(1+c)-1) so the band values order correctly,
    and  d = e^gamma (1+c) - 1  to clear the gap threshold built from the
    computed operator-norm bound with the given safety margin.  Returns
    (gamma, d).
    """
    if math.log1p(c) <= 1.0:
        raise ValueError("need ln(1+c) > 1, i.e. c > e - 1")
    signs = sign_sets(la, structure)
    traj = la.kernel_traj[: la.big_n, structure.m - 1]
    s_max = float(np.max(np.abs(traj)))
    s_min = min(abs(float(traj[t])) for t in sorted(signs.active))
    gamma_min = math.log1p(c) / (math.log1p(c) - 1.0)
    gamma = step * math.ceil((gamma_min + step) / step)
    while gamma <= cap:
        d = math.exp(gamma) * (1.0 + c) - 1.0
        g_sup = gamma * math.log1p(d)  # attained at x = d
        threshold = (c * s_max + la.op_norm_bound * g_sup * (s_max + s_min)) / s_min
        if d > margin * threshold:
            return gamma, d
        gamma += step
    raise RuntimeError("no admissible growth rate below the cap")


def reference_certified_problem(
    c: float = 3.0, beta: float = 0.5
) -> tuple[ProblemSpec, LinearAnalysis, float, float]:
    """Problem, analysis, gamma and d for the certified end-to-end run."""
    structure = reference_problem()
    la = analyze(structure)
    gamma, d = choose_growth_rate(la, structure, c=c)
    spec = reference_problem(log_band_text(gamma, beta))
    return spec, la, gamma, d
