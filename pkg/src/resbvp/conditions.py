"""Certification of solvability conditions.

The existence theory classifies time indices by the signs of the n-th
adjoint weight component and the m-th kernel-trajectory component, then
asks for a band 0 < c < d on which the nonlinearity is suitably bounded
away from per-index bounding tables (C2), a gap inequality tying d to the
operator-norm bound (C3), and a sign condition on the weighted sums of the
bounding tables (C4).  This module computes all constants, runs the checks
for the main criterion and its specialisations (sign-aligned, sublinear,
small linear growth, limit-type), and reports a structured verdict.

All bounds on the nonlinearity are sampling-based estimates from the
expression module, so verdicts are "numerically certified" rather than
proved; reports carry that label.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateSignDataError,
    InputError,
    NotApplicableError,
)
from .expressions import bound_on_box, parse
from .linear import LinearAnalysis
from .problem import ProblemSpec
from .serialize import format_float

__all__ = [
    "IndexSigns",
    "Certificate",
    "CheckEntry",
    "ConditionReport",
    "AutoSearchResult",
    "sign_sets",
    "certify_main",
    "certify_same_sign",
    "certify_sublinear",
    "certify_small_linear",
    "certify_landesman_lazer",
    "sturm_liouville_builder",
    "auto_certificate",
    "report_to_dict",
]

SIGN_TOL_FACTOR = 1e-10
AMBIGUOUS_BAND = 10.0  # guard band factor just above the zero threshold
C4_TOL = 1e-12
STRICT_TOL_FACTOR = 1e-9
DEFAULT_SAMPLES = 512


@dataclass(frozen=True)
class IndexSigns:
    """Partition of {0..N-1} by (weight sign, trajectory-component sign).

    ``pp`` holds indices with positive weight and positive component, and so
    on; ``zero`` holds indices with nonzero weight but vanishing component,
    which are the C1 obstruction.  Indices whose weight is below tolerance
    belong to no set.  Values falling in the guard band just above a zero
    threshold are collected in ``ambiguous`` and force an explicit
    C1-ambiguous failure rather than a silent classification.
    """

    pp: frozenset
    pm: frozenset
    mp: frozenset
    mm: frozenset
    zero: frozenset
    ambiguous: frozenset
    weight_tol: float
    traj_tol: float

    @property
    def active(self) -> frozenset:
        return self.pp | self.pm | self.mp | self.mm

    def as_dict(self) -> dict:
        return {
            "O_pp": sorted(self.pp),
            "O_pm": sorted(self.pm),
            "O_mp": sorted(self.mp),
            "O_mm": sorted(self.mm),
            "O_zero": sorted(self.zero),
            "ambiguous": sorted(self.ambiguous),
        }


@dataclass(frozen=True)
class Certificate:
    """A passing set of constants for one orientation of the main criterion."""

    c: float
    d: float
    orientation: str
    bound_lo: dict  # per-index table entering J1 (tight extremal choice)
    bound_hi: dict  # per-index table entering J2
    j1: float
    j2: float
    s_max: float
    s_min: float
    g_sup_d: float
    margin: float


@dataclass(frozen=True)
class CheckEntry:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ConditionReport:
    route: str
    passed: bool
    failed_condition: str | None
    checks: tuple[CheckEntry, ...]
    signs: IndexSigns
    constants: dict
    certificate: Certificate | None
    warnings: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class AutoSearchResult:
    report: ConditionReport | None
    trace: tuple[dict, ...]

    @property
    def found(self) -> bool:
        return self.report is not None


def _components(la: LinearAnalysis, spec: ProblemSpec):
    """(n-th weight components, m-th trajectory components) on {0..N-1}."""
    weights = la.cokernel_traj[:, la.n - 1]
    traj = la.kernel_traj[: la.big_n, spec.m - 1]
    return weights, traj


def sign_sets(
    la: LinearAnalysis, spec: ProblemSpec, sign_tol: float | None = None
) -> IndexSigns:
    """Classify indices by the signs of weight and trajectory components.

    ``sign_tol`` overrides the zero thresholds for both tables; by default
    each table uses 1e-10 times its own maximum magnitude.
    """
    weights, traj = _components(la, spec)
    if sign_tol is None:
        weight_tol = SIGN_TOL_FACTOR * (float(np.max(np.abs(weights))) or 1.0)
        traj_tol = SIGN_TOL_FACTOR * (float(np.max(np.abs(traj))) or 1.0)
    else:
        weight_tol = traj_tol = float(sign_tol)
    pp, pm, mp, mm, zero, ambiguous = set(), set(), set(), set(), set(), set()
    for t in range(la.big_n):
        w, s = float(weights[t]), float(traj[t])
        if abs(w) <= weight_tol:
            continue
        if abs(w) <= AMBIGUOUS_BAND * weight_tol:
            ambiguous.add(t)
            continue
        if abs(s) <= traj_tol:
            zero.add(t)
            continue
        if abs(s) <= AMBIGUOUS_BAND * traj_tol:
            ambiguous.add(t)
            continue
        if w > 0.0:
            (pp if s > 0.0 else pm).add(t)
        else:
            (mp if s > 0.0 else mm).add(t)
    return IndexSigns(
        pp=frozenset(pp),
        pm=frozenset(pm),
        mp=frozenset(mp),
        mm=frozenset(mm),
        zero=frozenset(zero),
        ambiguous=frozenset(ambiguous),
        weight_tol=weight_tol,
        traj_tol=traj_tol,
    )


def _band_constants(la: LinearAnalysis, spec: ProblemSpec, signs: IndexSigns):
    weights, traj = _components(la, spec)
    s_max = float(np.max(np.abs(traj)))
    active = sorted(signs.active)
    if not active:
        raise DegenerateSignDataError(
            "no sign-classified indices; the band minimum is undefined"
        )
    s_min = min(abs(float(traj[t])) for t in active)
    return weights, traj, s_max, s_min, active


def _g_sup(spec: ProblemSpec, d: float, samples: int) -> float:
    lo, hi = bound_on_box(spec.g, range(spec.big_n), -d, d, samples)
    return max(abs(lo), abs(hi))


def _c1_entry(signs: IndexSigns, star: str = "") -> tuple[CheckEntry, str | None]:
    if signs.ambiguous:
        entry = CheckEntry(
            f"C1{star}",
            False,
            f"ambiguous near-zero values at t in {sorted(signs.ambiguous)}",
        )
        return entry, f"C1{star}-ambiguous"
    if signs.zero:
        entry = CheckEntry(
            f"C1{star}",
            False,
            f"zero trajectory component with nonzero weight at t in {sorted(signs.zero)}",
        )
        return entry, f"C1{star}"
    return CheckEntry(f"C1{star}", True, "obstruction set empty"), None


def certify_main(
    la: LinearAnalysis,
    spec: ProblemSpec,
    c: float,
    d: float,
    orientation: str = "standard",
    samples: int = DEFAULT_SAMPLES,
    sign_tol: float | None = None,
) -> ConditionReport:
    """Run the main band criterion at a fixed (c, d).

    Bounding tables use the tight extremal choice (inf/sup of g over the
    visited interval per index); any admissible table is dominated by it.
    C4 is evaluated on the tight tables with an absolute 1e-12 tolerance;
    the strictness of C2 additionally requires enough slack that the tables
    can be perturbed into genuinely strict bounds without breaking C4
    (reported as C2-strictness when that fails).
    """
    if not (0.0 < c < d):
        raise ValueError("need 0 < c < d")
    if orientation not in ("standard", "reversed"):
        raise ValueError("orientation must be 'standard' or 'reversed'")
    signs = sign_sets(la, spec, sign_tol)
    weights, traj, s_max, s_min, active = _band_constants(la, spec, signs)
    checks: list[CheckEntry] = []
    c1, c1_fail = _c1_entry(signs)
    checks.append(c1)

    g = spec.g
    bound_lo: dict[int, float] = {}
    bound_hi: dict[int, float] = {}
    g_scale = 0.0
    for t in active:
        lo_pos, hi_pos = bound_on_box(g, (t,), c, d, samples)
        lo_neg, hi_neg = bound_on_box(g, (t,), -d, -c, samples)
        g_scale = max(g_scale, abs(lo_pos), abs(hi_pos), abs(lo_neg), abs(hi_neg))
        if orientation == "standard":
            if t in signs.pp:
                bound_lo[t], bound_hi[t] = lo_pos, hi_neg
            elif t in signs.pm:
                bound_lo[t], bound_hi[t] = lo_neg, hi_pos
            elif t in signs.mp:
                bound_lo[t], bound_hi[t] = hi_pos, lo_neg
            else:
                bound_lo[t], bound_hi[t] = hi_neg, lo_pos
        else:
            if t in signs.pp:
                bound_lo[t], bound_hi[t] = hi_pos, lo_neg
            elif t in signs.pm:
                bound_lo[t], bound_hi[t] = hi_neg, lo_pos
            elif t in signs.mp:
                bound_lo[t], bound_hi[t] = lo_pos, hi_neg
            else:
                bound_lo[t], bound_hi[t] = lo_neg, hi_pos

    j1 = sum(weights[t] * bound_lo[t] for t in active)
    j2 = sum(weights[t] * bound_hi[t] for t in active)
    weight_mass = sum(abs(weights[t]) for t in active)
    g_sup_d = _g_sup(spec, d, samples)
    strict_tol = STRICT_TOL_FACTOR * (1.0 + max(g_scale, g_sup_d))
    slack = strict_tol * weight_mass

    if orientation == "standard":
        c4_ok = (j2 <= C4_TOL) and (j1 >= -C4_TOL)
        c2_ok = (j2 <= -slack + C4_TOL) and (j1 >= slack - C4_TOL)
        margin_c24 = min(j1 - slack, -j2 - slack)
    else:
        c4_ok = (j1 <= C4_TOL) and (j2 >= -C4_TOL)
        c2_ok = (j1 <= -slack + C4_TOL) and (j2 >= slack - C4_TOL)
        margin_c24 = min(j2 - slack, -j1 - slack)

    rhs = (c * s_max + la.op_norm_bound * g_sup_d * (s_max + s_min)) / s_min
    c3_ok = d > rhs
    margin = min(margin_c24, d - rhs)

    checks.append(
        CheckEntry(
            "C2",
            c2_ok,
            f"strict-bound slack {format_float(slack)} against "
            f"J1={format_float(j1)}, J2={format_float(j2)}",
        )
    )
    checks.append(
        CheckEntry(
            "C3",
            c3_ok,
            f"d={format_float(d)} vs threshold {format_float(rhs)}",
        )
    )
    checks.append(
        CheckEntry(
            "C4",
            c4_ok,
            f"J1={format_float(j1)}, J2={format_float(j2)} ({orientation})",
        )
    )

    if c1_fail is not None:
        failed = c1_fail
    elif not c4_ok:
        failed = "C4"
    elif not c2_ok:
        failed = "C2-strictness"
    elif not c3_ok:
        failed = "C3"
    else:
        failed = None

    certificate = None
    if failed is None:
        certificate = Certificate(
            c=c,
            d=d,
            orientation=orientation,
            bound_lo=dict(sorted(bound_lo.items())),
            bound_hi=dict(sorted(bound_hi.items())),
            j1=float(j1),
            j2=float(j2),
            s_max=s_max,
            s_min=s_min,
            g_sup_d=g_sup_d,
            margin=float(margin),
        )
    constants = {
        "c": c,
        "d": d,
        "s_max": s_max,
        "s_min": s_min,
        "A_bar": la.op_norm_bound,
        "g_sup_d": g_sup_d,
        "J1": float(j1),
        "J2": float(j2),
        "C3_threshold": float(rhs),
        "strict_slack": float(slack),
        "margin": float(margin),
    }
    return ConditionReport(
        route="main",
        passed=failed is None,
        failed_condition=failed,
        checks=tuple(checks),
        signs=signs,
        constants=constants,
        certificate=certificate,
        notes=("verdict is numerically certified from sampled bounds",),
    )


def certify_same_sign(
    la: LinearAnalysis,
    spec: ProblemSpec,
    c: float,
    d: float,
    samples: int = DEFAULT_SAMPLES,
    sign_tol: float | None = None,
) -> ConditionReport:
    """Sign-aligned specialisation: zero bounding tables suffice.

    Requires the weight and trajectory components to agree in sign at every
    index (all products >= 0, or all <= 0); raises NotApplicableError
    otherwise.  The nonlinearity must then take one strict sign on [c, d]
    and the opposite one on [-d, -c], and the gap inequality must hold.
    """
    if not (0.0 < c < d):
        raise ValueError("need 0 < c < d")
    signs = sign_sets(la, spec, sign_tol)
    aligned_nonneg = not (signs.pm | signs.mp)
    aligned_nonpos = not (signs.pp | signs.mm)
    if not (aligned_nonneg or aligned_nonpos):
        raise NotApplicableError(
            "weight and trajectory components do not share a sign pattern"
        )
    weights, traj, s_max, s_min, active = _band_constants(la, spec, signs)
    checks: list[CheckEntry] = []
    c1, c1_fail = _c1_entry(signs, star="*")
    checks.append(c1)

    t_all = range(spec.big_n)
    lo_pos, hi_pos = bound_on_box(spec.g, t_all, c, d, samples)
    lo_neg, hi_neg = bound_on_box(spec.g, t_all, -d, -c, samples)
    g_sup_d = _g_sup(spec, d, samples)
    strict_tol = STRICT_TOL_FACTOR * (
        1.0 + max(abs(lo_pos), abs(hi_pos), abs(lo_neg), abs(hi_neg), g_sup_d)
    )
    pos_on_band = lo_pos > strict_tol and hi_neg < -strict_tol
    neg_on_band = hi_pos < -strict_tol and lo_neg > strict_tol
    c3star_ok = pos_on_band or neg_on_band
    checks.append(
        CheckEntry(
            "C3*",
            c3star_ok,
            "g sign on [c,d] x [-d,-c]: "
            f"[{format_float(lo_pos)}, {format_float(hi_pos)}] x "
            f"[{format_float(lo_neg)}, {format_float(hi_neg)}]",
        )
    )
    rhs = (c * s_max + la.op_norm_bound * g_sup_d * (s_max + s_min)) / s_min
    c4star_ok = d > rhs
    checks.append(
        CheckEntry(
            "C4*", c4star_ok, f"d={format_float(d)} vs threshold {format_float(rhs)}"
        )
    )

    if (aligned_nonneg and pos_on_band) or (aligned_nonpos and neg_on_band):
        orientation = "standard"
    else:
        orientation = "reversed"

    if c1_fail is not None:
        failed = c1_fail
    elif not c3star_ok:
        failed = "C3*"
    elif not c4star_ok:
        failed = "C4*"
    else:
        failed = None

    certificate = None
    if failed is None:
        certificate = Certificate(
            c=c,
            d=d,
            orientation=orientation,
            bound_lo={t: 0.0 for t in active},
            bound_hi={t: 0.0 for t in active},
            j1=0.0,
            j2=0.0,
            s_max=s_max,
            s_min=s_min,
            g_sup_d=g_sup_d,
            margin=float(
                min(
                    d - rhs,
                    max(lo_pos - strict_tol, -hi_pos - strict_tol),
                    max(-hi_neg - strict_tol, lo_neg - strict_tol),
                )
            ),
        )
    constants = {
        "c": c,
        "d": d,
        "s_max": s_max,
        "s_min": s_min,
        "A_bar": la.op_norm_bound,
        "g_sup_d": g_sup_d,
        "J1": 0.0,
        "J2": 0.0,
        "C3_threshold": float(rhs),
        "alignment": "nonnegative" if aligned_nonneg else "nonpositive",
    }
    return ConditionReport(
        route="same-sign",
        passed=failed is None,
        failed_condition=failed,
        checks=tuple(checks),
        signs=signs,
        constants=constants,
        certificate=certificate,
        notes=("verdict is numerically certified from sampled bounds",),
    )


def _delegate_orientations(la, spec, c, d, orientation, samples, sign_tol):
    if orientation in ("standard", "reversed"):
        return certify_main(la, spec, c, d, orientation, samples, sign_tol)
    report = certify_main(la, spec, c, d, "standard", samples, sign_tol)
    if report.passed:
        return report
    reversed_report = certify_main(la, spec, c, d, "reversed", samples, sign_tol)
    return reversed_report if reversed_report.passed else report


def _envelope_violation(spec, d, m1, m2, beta, samples):
    """Worst violation of |g(t,x)| <= m1 |x|^beta + m2 over sampled [-d, d]."""
    worst = -math.inf
    for t in range(spec.big_n):
        for k in range(samples):
            x = -d + 2.0 * d * k / (samples - 1)
            value = abs(spec.g.eval(float(t), x)) - (m1 * abs(x) ** beta + m2)
            worst = max(worst, value)
    return worst


def certify_sublinear(
    la: LinearAnalysis,
    spec: ProblemSpec,
    c: float,
    m1: float,
    m2: float,
    beta: float,
    orientation: str = "both",
    samples: int = DEFAULT_SAMPLES,
) -> ConditionReport:
    """Sublinear-growth route: derive the minimal admissible d, then delegate.

    With k1 = A_bar * m1 and k2 = A_bar * m2 the gap inequality holds for
    every d above  (c s_max + (k1 (1-beta) + k2)(s_max+s_min)) /
    (s_min - k1 beta (s_max+s_min)); a nonpositive denominator means the
    route does not apply (growth coefficient too large).
    """
    if not (0.0 < beta <= 1.0):
        raise ValueError("need 0 < beta <= 1")
    if m1 < 0.0 or m2 < 0.0:
        raise ValueError("envelope constants must be nonnegative")
    if c <= 0.0:
        raise ValueError("need c > 0")
    signs = sign_sets(la, spec)
    _, _, s_max, s_min, _ = _band_constants(la, spec, signs)
    k1 = la.op_norm_bound * m1
    k2 = la.op_norm_bound * m2
    denom = s_min - k1 * beta * (s_max + s_min)
    if denom <= 0.0:
        raise NotApplicableError(
            f"growth coefficient too large: A_bar*M1 = {format_float(k1)} is not "
            f"below s_min / (beta (s_min + s_max)) = "
            f"{format_float(s_min / (beta * (s_min + s_max)))}"
        )
    d_min = (c * s_max + (k1 * (1.0 - beta) + k2) * (s_max + s_min)) / denom
    d = max(d_min, c, 1.0) * (1.0 + 1e-6)
    checks = [
        CheckEntry(
            "C3**",
            True,
            f"minimal admissible d = {format_float(d_min)}, using {format_float(d)}",
        )
    ]
    violation = _envelope_violation(spec, d, m1, m2, beta, samples)
    env_ok = violation <= 1e-9 * (1.0 + m1 * d**beta + m2)
    checks.append(
        CheckEntry(
            "C2**",
            env_ok,
            f"sampled envelope violation {format_float(violation)}",
        )
    )
    if not env_ok:
        return ConditionReport(
            route="sublinear",
            passed=False,
            failed_condition="C2**",
            checks=tuple(checks),
            signs=signs,
            constants={
                "c": c,
                "d": d,
                "K1": k1,
                "K2": k2,
                "beta": beta,
                "d_min": d_min,
            },
            certificate=None,
        )
    inner = _delegate_orientations(la, spec, c, d, orientation, samples, None)
    constants = dict(inner.constants)
    constants.update({"K1": k1, "K2": k2, "beta": beta, "d_min": d_min})
    return ConditionReport(
        route="sublinear",
        passed=inner.passed,
        failed_condition=inner.failed_condition,
        checks=tuple(checks) + inner.checks,
        signs=inner.signs,
        constants=constants,
        certificate=inner.certificate,
        notes=inner.notes,
    )


def certify_small_linear(
    la: LinearAnalysis,
    spec: ProblemSpec,
    r: float,
    m1: float,
    m2: float,
    orientation: str = "both",
    samples: int = DEFAULT_SAMPLES,
    max_doublings: int = 60,
) -> ConditionReport:
    """Small-linear-growth route: grow d until the gap inequality holds.

    Applicable when A_bar * m1 * (s_max + s_min) / s_min < 1, which makes
    the gap threshold eventually fall below d; d doubles from 2 max(r, 1)
    until the inequality holds, then the main checker runs at c = r.
    """
    if r <= 0.0:
        raise ValueError("need r > 0")
    if m1 < 0.0 or m2 < 0.0:
        raise ValueError("envelope constants must be nonnegative")
    signs = sign_sets(la, spec)
    _, _, s_max, s_min, _ = _band_constants(la, spec, signs)
    ratio = la.op_norm_bound * m1 * (s_max + s_min) / s_min
    if ratio >= 1.0:
        raise NotApplicableError(
            f"linear growth ratio {format_float(ratio)} is not below 1"
        )
    d = 2.0 * max(r, 1.0)
    found = None
    for _ in range(max_doublings):
        g_sup_d = _g_sup(spec, d, samples)
        rhs = (r * s_max + la.op_norm_bound * g_sup_d * (s_max + s_min)) / s_min
        if d > rhs:
            found = d
            break
        d *= 2.0
    if found is None:
        raise NotApplicableError(
            f"no admissible d found within {max_doublings} doublings"
        )
    violation = _envelope_violation(spec, found, m1, m2, 1.0, samples)
    env_ok = violation <= 1e-9 * (1.0 + m1 * found + m2)
    checks = [
        CheckEntry(
            "growth-ratio",
            True,
            f"A_bar*M1*(s_max+s_min)/s_min = {format_float(ratio)} < 1",
        ),
        CheckEntry("envelope", env_ok, f"violation {format_float(violation)}"),
    ]
    if not env_ok:
        return ConditionReport(
            route="small-linear",
            passed=False,
            failed_condition="envelope",
            checks=tuple(checks),
            signs=signs,
            constants={"r": r, "d": found, "ratio": ratio},
            certificate=None,
        )
    inner = _delegate_orientations(la, spec, r, found, orientation, samples, None)
    constants = dict(inner.constants)
    constants.update({"r": r, "ratio": ratio})
    return ConditionReport(
        route="small-linear",
        passed=inner.passed,
        failed_condition=inner.failed_condition,
        checks=tuple(checks) + inner.checks,
        signs=inner.signs,
        constants=constants,
        certificate=inner.certificate,
        notes=inner.notes,
    )


def certify_landesman_lazer(
    la: LinearAnalysis,
    spec: ProblemSpec,
    g_plus: float,
    g_minus: float,
    r: float,
    limit_tol: float = 0.5,
    samples: int = DEFAULT_SAMPLES,
) -> ConditionReport:
    """Limit-type route for bounded, time-independent nonlinearities.

    The user supplies the limits at +/- infinity and a radius r past which
    they are sampled-verified within limit_tol.  The weighted limit sums
    L1, L2 must have opposite signs; a slack epsilon below their common
    magnitude then yields a radius past which the band checks of the main
    criterion hold, and the small-linear route finishes the job with a
    bounded envelope (m1 = 0).
    """
    if r <= 0.0:
        raise ValueError("need r > 0")
    # H1: the nonlinearity must not depend on t.
    probe_xs = np.linspace(-max(4.0 * r, 10.0), max(4.0 * r, 10.0), 33)
    spread = 0.0
    scale = 0.0
    for x in probe_xs:
        vals = [spec.g.eval(float(t), float(x)) for t in range(spec.big_n)]
        spread = max(spread, max(vals) - min(vals))
        scale = max(scale, max(abs(v) for v in vals))
    if spread > 1e-9 * (1.0 + scale):
        raise InputError(
            f"nonlinearity depends on t (spread {format_float(spread)}); "
            "the limit-type route requires time independence"
        )
    # Verify the supplied limits on a sampled window beyond r.
    check_xs = np.geomspace(max(r, 1e-6), 32.0 * max(r, 1e-6), 64)
    dev_plus = max(abs(spec.g.eval(0.0, float(x)) - g_plus) for x in check_xs)
    dev_minus = max(abs(spec.g.eval(0.0, -float(x)) - g_minus) for x in check_xs)
    if max(dev_plus, dev_minus) > limit_tol:
        raise InputError(
            f"supplied limits not confirmed beyond r={format_float(r)}: deviations "
            f"{format_float(dev_plus)} / {format_float(dev_minus)} exceed "
            f"limit_tol={format_float(limit_tol)}"
        )

    signs = sign_sets(la, spec)
    weights, _, s_max, s_min, active = _band_constants(la, spec, signs)
    sum_plus = float(sum(weights[t] for t in signs.pp | signs.mp))
    sum_minus = float(sum(weights[t] for t in signs.pm | signs.mm))
    l1 = g_plus * sum_plus + g_minus * sum_minus
    l2 = g_minus * sum_plus + g_plus * sum_minus
    checks = [
        CheckEntry(
            "H4",
            l1 * l2 < 0.0,
            f"L1={format_float(l1)}, L2={format_float(l2)}",
        )
    ]
    constants = {
        "L1": l1,
        "L2": l2,
        "sum_plus_weights": sum_plus,
        "sum_minus_weights": sum_minus,
        "g_plus": g_plus,
        "g_minus": g_minus,
    }
    if not l1 * l2 < 0.0:
        return ConditionReport(
            route="landesman-lazer",
            passed=False,
            failed_condition="H4",
            checks=tuple(checks),
            signs=signs,
            constants=constants,
            certificate=None,
        )
    weight_mass = sum(abs(weights[t]) for t in active)
    gap = min(l1, -l2) if l1 > 0.0 else min(l2, -l1)
    eps = 0.5 * gap / weight_mass
    # Find a radius past which g stays within eps of its limits (sampled).
    r_eps = max(r, 1.0)
    ok = False
    for _ in range(60):
        window = np.geomspace(r_eps, 8.0 * r_eps, 48)
        dp = max(abs(spec.g.eval(0.0, float(x)) - g_plus) for x in window)
        dm = max(abs(spec.g.eval(0.0, -float(x)) - g_minus) for x in window)
        if max(dp, dm) < 0.9 * eps:
            ok = True
            break
        r_eps *= 2.0
    if not ok:
        raise NotApplicableError(
            "could not locate a radius where the limits hold within epsilon"
        )
    # Bounded envelope for the delegation.
    mid_lo, mid_hi = bound_on_box(spec.g, range(spec.big_n), -8 * r_eps, 8 * r_eps, samples)
    m2 = 1.05 * max(abs(mid_lo), abs(mid_hi), abs(g_plus), abs(g_minus)) + eps
    orientation = "standard" if l1 > 0.0 else "reversed"
    constants.update({"epsilon": eps, "r_epsilon": r_eps, "M2": m2})
    inner = certify_small_linear(
        la, spec, r_eps, 0.0, m2, orientation=orientation, samples=samples
    )
    merged = dict(inner.constants)
    merged.update(constants)
    return ConditionReport(
        route="landesman-lazer",
        passed=inner.passed,
        failed_condition=inner.failed_condition,
        checks=tuple(checks) + inner.checks,
        signs=inner.signs,
        constants=merged,
        certificate=inner.certificate,
        notes=inner.notes,
    )


# ---------------------------------------------------------------------------
# Second-order self-adjoint builder
# ---------------------------------------------------------------------------


def _table_expression(values):
    """Expression in t that evaluates to values[t] for integer t."""
    parts = [format_float(v) for v in values]
    text = parts[-1]
    for t in range(len(values) - 2, -1, -1):
        text = f"if(t == {t}, {parts[t]}, {text})"
    return text


def sturm_liouville_builder(
    p,
    q,
    lam: float,
    a11: float,
    a12: float,
    a21: float,
    a22: float,
    a: int,
    b: int,
    f: str = "0",
) -> ProblemSpec:
    """Encode a second-order self-adjoint problem in recurrence normal form.

    The delta-form equation  Delta(p(t-1) Delta x(t-1)) + q(t) x(t)
    + lam x(t) = f(x(t))  on t in {a+1, ..., b+1} with separated two-point
    conditions  a11 x(a) + a12 Dx(a) = 0,  a21 x(b+1) + a22 Dx(b+1) = 0
    becomes  y(s+2) + a1(s) y(s+1) + a0(s) y(s) = f(y(s+1)) / p  via
    y(s) = x(a+s).  The lag index is m = 2 (the nonlinearity sees the
    interior point).  ``p`` may be a scalar or a table p[s] = p(a+s) of
    length N+1; ``q`` a scalar or a table q[s] = q(a+1+s) of length N,
    where N = b+1-a.
    """
    big_n = b + 1 - a
    if big_n < 3:
        raise InputError("grid must contain at least three equations (b >= a + 2)")
    p_arr = np.asarray(p, dtype=float)
    if p_arr.ndim == 0:
        p_arr = np.full(big_n + 1, float(p_arr))
    if p_arr.shape != (big_n + 1,):
        raise InputError(f"p must be a scalar or a table of length {big_n + 1}")
    if np.any(p_arr <= 0.0):
        raise InputError("p must be positive on the whole grid")
    q_arr = np.asarray(q, dtype=float)
    if q_arr.ndim == 0:
        q_arr = np.full(big_n, float(q_arr))
    if q_arr.shape != (big_n,):
        raise InputError(f"q must be a scalar or a table of length {big_n}")
    if a11 == 0.0 and a12 == 0.0:
        raise InputError("left boundary row is degenerate")
    if a21 == 0.0 and a22 == 0.0:
        raise InputError("right boundary row is degenerate")

    a0 = p_arr[:-1] / p_arr[1:]
    a1 = (q_arr + lam - p_arr[1:] - p_arr[:-1]) / p_arr[1:]
    coeffs = np.vstack([a0, a1])

    scales = 1.0 / p_arr[1:]
    if np.all(scales == scales[0]):
        g_text = f"({f}) * {format_float(scales[0])}"
    else:
        g_text = f"({f}) * ({_table_expression(scales)})"

    boundary = [np.zeros((2, 2)) for _ in range(big_n + 1)]
    boundary[0] = np.array([[a11 - a12, a12], [0.0, 0.0]])
    boundary[big_n] = np.array([[0.0, 0.0], [a21 - a22, a22]])
    return ProblemSpec(
        n=2,
        big_n=big_n,
        m=2,
        a=coeffs,
        boundary=tuple(boundary),
        g=parse(g_text),
        g_text=g_text,
    )


def auto_certificate(
    la: LinearAnalysis,
    spec: ProblemSpec,
    c_grid,
    d_cap: float,
    orientation: str = "both",
    samples: int = DEFAULT_SAMPLES,
) -> AutoSearchResult:
    """Scan c over a grid and double d from 2c, returning the first pass.

    Absence of a certificate is a value, not an error; the trace records
    every failed attempt with its failing condition.
    """
    trace: list[dict] = []
    orientations = (
        ("standard", "reversed") if orientation == "both" else (orientation,)
    )
    for c in c_grid:
        if c <= 0.0:
            continue
        d = 2.0 * c
        while d <= d_cap:
            for orient in orientations:
                report = certify_main(la, spec, c, d, orient, samples)
                if report.passed:
                    return AutoSearchResult(report=report, trace=tuple(trace))
                trace.append(
                    {
                        "c": float(c),
                        "d": float(d),
                        "orientation": orient,
                        "failed": report.failed_condition,
                    }
                )
            d *= 2.0
    return AutoSearchResult(report=None, trace=tuple(trace))


def report_to_dict(report: ConditionReport) -> dict:
    """JSON-ready view of a condition report."""
    doc = {
        "route": report.route,
        "passed": report.passed,
        "failed_condition": report.failed_condition,
        "checks": [
            {"name": c.name, "passed": c.passed, "detail": c.detail}
            for c in report.checks
        ],
        "sign_sets": report.signs.as_dict(),
        "constants": {k: report.constants[k] for k in sorted(report.constants)},
        "warnings": list(report.warnings),
        "notes": list(report.notes),
    }
    if report.certificate is not None:
        cert = report.certificate
        doc["certificate"] = {
            "c": cert.c,
            "d": cert.d,
            "orientation": cert.orientation,
            "bound_lo": {str(t): v for t, v in cert.bound_lo.items()},
            "bound_hi": {str(t): v for t, v in cert.bound_hi.items()},
            "J1": cert.j1,
            "J2": cert.j2,
            "s_max": cert.s_max,
            "s_min": cert.s_min,
            "g_sup_d": cert.g_sup_d,
            "margin": cert.margin,
        }
    else:
        doc["certificate"] = None
    return doc
