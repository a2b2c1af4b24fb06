"""Closed-form shearing computations in the 2x2 picture.

Conventions (fixed throughout the package):

    u^t    = [[1, 0], [t, 1]]          lower-triangular unipotent
    ubar^r = [[1, r], [0, 1]]          upper-triangular unipotent
    a^w    = diag(e^{w/2}, e^{-w/2})   diagonal flow

Under these, u^t ubar^r = ubar^{r/(1+rt)} a^{-2 log(1+rt)} u^{t/(1+rt)}
holds verbatim, and conjugation by a^w scales u-times by e^{-w} and
ubar-entries (the b slot) by e^{+w}.
"""

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOLS
from .errors import (
    ConditioningError,
    DomainError,
    PreconditionError,
    RangeError,
    SingularityError,
)
from .gap_combinatorics import IntervalFamily, effective_gap, intersect_families
from .weight_calc import adjoint_a, adjoint_u

__all__ = [
    "Sl2Matrix",
    "ShearProfile",
    "relative_motion",
    "poly_coeff_bounds",
    "closeness_intervals_sl2",
    "closeness_intervals_vperp",
    "closeness_intervals_full",
    "delta_r",
    "commutation_uubar",
    "renormalize_report",
    "shear_compare",
    "xi_exponent",
    "u_mat",
    "ubar_mat",
    "a_mat",
]


def u_mat(t):
    return np.array([[1.0, 0.0], [t, 1.0]])


def ubar_mat(r):
    return np.array([[1.0, r], [0.0, 1.0]])


def a_mat(w):
    return np.array([[np.exp(w / 2.0), 0.0], [0.0, np.exp(-w / 2.0)]])


@dataclass(frozen=True, eq=False)
class Sl2Matrix:
    a: float
    b: float
    c: float
    d: float

    @classmethod
    def from_array(cls, m, check=True):
        m = np.asarray(m, dtype=float)
        out = cls(float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))
        if check and abs(out.det - 1.0) > 1e-10:
            raise DomainError(f"det must be 1 to 1e-10, got {out.det}")
        return out

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    @property
    def mat(self):
        return np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other):
        return Sl2Matrix.from_array(self.mat @ other.mat, check=False)

    def inv(self):
        return Sl2Matrix(self.d, -self.b, -self.c, self.a)

    def near_identity(self, eps):
        return (
            abs(self.b) < eps
            and abs(self.c) < eps
            and abs(self.a - 1.0) < eps
            and abs(self.d - 1.0) < eps
        )


@dataclass(frozen=True, eq=False)
class ShearProfile:
    """Closeness intervals of a near-identity element plus measured constants."""

    h: Sl2Matrix
    vperp_parts: tuple          # tuple of (sigma, coefficient vector)
    intervals: IntervalFamily
    bound_report: dict


def relative_motion(h, t, s):
    """u^t h u^{-s} in closed form.

    Entries: [[a - bs, b], [c + (a-d)s - bs^2 + (t-s)(a-bs), d + bt]].
    The (1,2) entry equals b for every (t, s).
    """
    a, b, c, d = h.a, h.b, h.c, h.d
    lower = c + (a - d) * s - b * s * s + (t - s) * (a - b * s)
    return Sl2Matrix(a - b * s, b, lower, d + b * t)


def delta_r(r, t):
    """Relative drift t - t/(1+rt) = r t^2 / (1+rt)."""
    denom = 1.0 + r * t
    if denom <= 0.0:
        raise SingularityError(f"1 + rt = {denom} <= 0")
    return r * t * t / denom


def commutation_uubar(t, r):
    """Decompose u^t ubar^r = ubar^{r'} a^{w} u^{t'}.

    Returns (r', w, t') = (r/(1+rt), -2 log(1+rt), t/(1+rt)).
    """
    denom = 1.0 + r * t
    if denom <= 0.0:
        raise SingularityError(f"1 + rt = {denom} <= 0")
    return r / denom, -2.0 * np.log(denom), t / denom


def xi_exponent(eta, j):
    """Exponent loss factor after j-1 failed-gap merges: (1+eta)^-(j-1)."""
    if j < 1:
        raise DomainError("j must be >= 1")
    return (1.0 + eta) ** (-(j - 1))


def _envelope(s, R0, kappa, C):
    return C * np.maximum(R0, np.maximum(s, 0.0) ** (1.0 - kappa))


def _solve_le_regions(f, bound, s_max, n_scan=4000, tol=1e-6):
    """Intervals where f(s) <= bound(s) on [0, s_max].

    Dense scan on a hybrid linear/log grid, then bisection on every sign
    change of f - bound.  Ties (equality) land in the closed intervals.
    """
    lin = np.linspace(0.0, min(10.0, s_max), n_scan // 4)
    if s_max > 10.0:
        log = np.geomspace(10.0, s_max, n_scan)
        grid = np.unique(np.concatenate([lin, log]))
    else:
        grid = lin
    vals = f(grid) - bound(grid)
    inside = vals <= 0.0
    if not np.any(inside):
        return IntervalFamily.empty(s_max)

    def refine(lo, hi):
        # invariant: state(lo) != state(hi)
        flo = f(np.array([lo]))[0] - bound(np.array([lo]))[0]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = f(np.array([mid]))[0] - bound(np.array([mid]))[0]
            if (fm <= 0.0) == (flo <= 0.0):
                lo = mid
                flo = fm
            else:
                hi = mid
            if hi - lo <= tol:
                break
        return 0.5 * (lo + hi)

    pieces = []
    start = None
    for i, s in enumerate(grid):
        if inside[i] and start is None:
            start = 0.0 if i == 0 else refine(grid[i - 1], s)
        if not inside[i] and start is not None:
            pieces.append([start, refine(grid[i - 1], s)])
            start = None
    if start is not None:
        pieces.append([start, s_max])
    # merge pieces closer than the refinement tolerance
    merged = []
    for l, u in pieces:
        if merged and l - merged[-1][1] <= tol:
            merged[-1][1] = u
        else:
            merged.append([l, u])
    return IntervalFamily.from_pairs(merged, s_max, check=False)


def poly_coeff_bounds(coeffs, R0, kappa, lbar1, C=None, grid_n=2000):
    """Recover bounds |v_i| <= B_i R0 lbar1^{1-i-kappa} from samples of p.

    Follows the sample-point pipeline: from values of F(x) = (p(lbar1 x) -
    p(0)) (lbar1 x)^{kappa-1} at x = 1/k .. k/k, solve the k x k power-matrix
    system for the v_i and report the measured constants B_i.  The growth
    hypothesis |p| <= C max(R0, t^{1-kappa}) is checked on a grid first.
    """
    coeffs = np.asarray(coeffs, dtype=float)  # v_0 .. v_k
    k = len(coeffs) - 1
    if k < 1:
        raise DomainError("polynomial must have degree >= 1 (pass [v0, v1, ...])")
    if not (0.0 < kappa <= 1.0):
        raise DomainError(f"kappa must lie in (0, 1], got {kappa}")
    if lbar1 <= 1.0:
        raise PreconditionError(f"lbar1 must exceed 1, got {lbar1}")
    p = np.polynomial.Polynomial(coeffs)
    ts = np.linspace(0.0, lbar1, grid_n)
    env = _envelope(ts, R0, kappa, 1.0)
    ratio = np.max(np.abs(p(ts)) / env)
    if C is None:
        C = max(ratio, 1.0)
    elif ratio > C * (1.0 + 1e-9):
        raise PreconditionError(
            f"|p| exceeds C*max(R0, t^(1-kappa)) on the grid: ratio {ratio:.3e}"
        )
    if np.all(coeffs == 0.0):
        return {"B": np.zeros(k), "recovered": np.zeros(k), "C": C,
                "condition": 1.0}
    xs = np.arange(1, k + 1) / k
    M = xs[:, None] ** (np.arange(k)[None, :] + kappa)  # (i, j) -> x_i^{j-1+kappa}
    cond = np.linalg.cond(M)
    if cond > DEFAULT_TOLS.conditioning:
        raise ConditioningError(f"sample matrix condition {cond:.3e}")
    F = (p(lbar1 * xs) - coeffs[0]) * (lbar1 * xs) ** (kappa - 1.0)
    w = np.linalg.solve(M, F)  # w_j = v_j * lbar1^{j-1+kappa}
    recovered = w / lbar1 ** (np.arange(1, k + 1) - 1.0 + kappa)
    B = np.abs(recovered) / (R0 * lbar1 ** (1.0 - np.arange(1, k + 1) - kappa))
    return {"B": B, "recovered": recovered, "C": C, "condition": float(cond)}


def closeness_intervals_sl2(h, eps, kappa, R0, C=1.0, s_max=None, tol=None):
    """Solution set of |-b s^2 + (a-d) s| <= C max(R0, s^(1-kappa)).

    Returns (family, bounds) where bounds carries the measured constants of
    |b| <= B lbar1^(-1-kappa) and |a-d| <= B' lbar1^(-kappa).
    """
    if s_max is None:
        s_max = DEFAULT_TOLS.s_max
    if tol is None:
        tol = DEFAULT_TOLS.endpoint_abs
    if not h.near_identity(eps):
        raise PreconditionError("h is not within eps of the identity")
    b, amd = h.b, h.a - h.d

    def f(s):
        return np.abs(-b * s * s + amd * s)

    fam = _solve_le_regions(f, lambda s: _envelope(s, R0, kappa, C), s_max,
                            tol=tol)
    lbar1 = fam.intervals[0, 1] if len(fam) else 0.0
    bounds = {}
    if lbar1 > 0.0:
        bounds["b"] = abs(b) * lbar1 ** (1.0 + kappa)
        bounds["a_minus_d"] = abs(amd) * lbar1 ** kappa
        bounds["lbar1"] = float(lbar1)
    return fam, bounds


def closeness_intervals_vperp(b, sigma, eps, C=1.0, s_max=None, tol=None):
    """Set of s with ||Ad(u^s) b|| <= C eps (coefficient l2 norm)."""
    if s_max is None:
        s_max = DEFAULT_TOLS.s_max
    if tol is None:
        tol = DEFAULT_TOLS.endpoint_abs
    b = np.asarray(b, dtype=float)
    if len(b) != sigma + 1:
        raise DomainError(f"coefficient vector must have length {sigma + 1}")

    def f(s):
        out = np.empty_like(s)
        for i, si in enumerate(s):
            out[i] = np.linalg.norm(adjoint_u(si, b))
        return out

    return _solve_le_regions(f, lambda s: np.full_like(s, C * eps), s_max,
                             tol=tol)


def closeness_intervals_full(
    h,
    vperp_parts,
    eps,
    kappa,
    R0,
    t_map=None,
    C=1.0,
    eta=0.1,
    s_max=None,
    hoelder_C=None,
):
    """Intersect the sl2 and vperp closeness families into a ShearProfile.

    `vperp_parts` is a sequence of (sigma, coefficient vector).  When a
    monotone time map t(s) is supplied, its effectiveness
    |t(s) - s| <= C' max(R0, s^(1-kappa)) is checked on a grid.  The report
    carries the per-coefficient measured constants; for every consecutive
    pair failing the effective-gap test at `eta` the strengthened
    xi-exponent constants are attached.
    """
    if s_max is None:
        s_max = DEFAULT_TOLS.s_max
    if t_map is not None:
        ss = np.geomspace(max(R0, 1e-3), s_max, 200)
        dev = np.abs(np.array([t_map(s) for s in ss]) - ss)
        envc = hoelder_C if hoelder_C is not None else C
        bad = dev > _envelope(ss, R0, kappa, envc) * (1.0 + 1e-9)
        if np.any(bad):
            raise PreconditionError(
                "time map violates |t(s)-s| <= C max(R0, s^(1-kappa)) on grid"
            )
    sl2_fam, bounds = closeness_intervals_sl2(
        h, eps, kappa, R0, C=C, s_max=s_max
    )
    fam = sl2_fam
    count_bound = max(1, len(sl2_fam))
    for sigma, b in vperp_parts:
        if np.linalg.norm(b) >= eps:
            raise PreconditionError("vperp part is not eps-small")
        vf = closeness_intervals_vperp(b, sigma, eps, C=C, s_max=s_max)
        count_bound *= max(1, len(vf))
        fam = intersect_families(fam, vf)
    bounds["interval_count"] = len(fam)
    bounds["interval_count_product_bound"] = count_bound
    # strengthened constants across failed-gap consecutive pairs
    strengthened = []
    for k in range(len(fam) - 1):
        I = fam.intervals[k]
        Jn = fam.intervals[k + 1]
        if not effective_gap(I, Jn, eta):
            xi = xi_exponent(eta, k + 2)
            lbark = fam.intervals[k, 1]
            entry = {
                "pair": (k, k + 1),
                "xi": xi,
                "b": abs(h.b) * lbark ** (xi * (1.0 + kappa)),
                "a_minus_d": abs(h.a - h.d) * lbark ** (xi * kappa),
            }
            for m, (sigma, bv) in enumerate(vperp_parts):
                bv = np.asarray(bv, dtype=float)
                for i in range(1, sigma + 1):
                    entry[f"vperp{m}_b{i}"] = abs(bv[i]) * lbark ** (
                        xi * (sigma - i)
                    )
            strengthened.append(entry)
    bounds["strengthened"] = strengthened
    return ShearProfile(
        h=h, vperp_parts=tuple((s, np.asarray(b, float)) for s, b in vperp_parts),
        intervals=fam, bound_report=bounds,
    )


def renormalize_report(h, vperp_parts, omega, s=None, t=None):
    """Audit table for conjugation by a^omega.

    Rows report before/after magnitudes: the sl2 entries scale as
    b -> e^omega b, c -> e^-omega c; vperp coefficients scale by adjoint_a;
    shear times scale as u^-s -> u^(-s e^-omega).
    """
    if abs(omega) > 1400.0:
        raise RangeError("omega out of double range for e^{omega}")
    ew = np.exp(omega)
    conj = a_mat(omega) @ h.mat @ a_mat(-omega)
    rows = [
        {"name": "b", "before": h.b, "after": float(conj[0, 1]),
         "predicted": h.b * ew},
        {"name": "c", "before": h.c, "after": float(conj[1, 0]),
         "predicted": h.c / ew},
        {"name": "a", "before": h.a, "after": float(conj[0, 0]),
         "predicted": h.a},
        {"name": "d", "before": h.d, "after": float(conj[1, 1]),
         "predicted": h.d},
    ]
    for m, (sigma, b) in enumerate(vperp_parts):
        scaled = adjoint_a(omega, b)
        for i in range(sigma + 1):
            rows.append(
                {"name": f"vperp{m}_b{i}", "before": float(b[i]),
                 "after": float(scaled[i]), "predicted": float(scaled[i])}
            )
    if s is not None:
        rows.append({"name": "u_time_s", "before": -s, "after": -s / ew,
                     "predicted": -s * np.exp(-omega)})
    if t is not None:
        rows.append({"name": "u_time_t", "before": -t, "after": -t / ew,
                     "predicted": -t * np.exp(-omega)})
    return rows


def shear_compare(records, eps, s1, s2):
    """Coefficient bounds from two-time smallness of centralizer differences.

    Each record is (sigma, p_s1, p_s2) or (sigma, p0, p_s1, p_s2): the
    top-coefficient values of the relative motion difference at times s1, s2
    (and optionally 0).  When p0 is absent it is only known to be < eps in
    magnitude and the bounds take the worst case over it.

    Returns per-record bounds B with |b^{sigma-i}| <= B_i eps s2^{-i} and a
    certified sup bound for |p(t)| on [0, s2].
    """
    if not (s2 / 3.0 - 1e-12 <= s1 <= 2.0 * s2 / 3.0 + 1e-12):
        raise PreconditionError(f"s1 = {s1} outside [s2/3, 2 s2/3]")
    out = []
    for rec in records:
        if len(rec) == 4:
            sigma, p0, ps1, ps2 = rec
            p0_known = True
        else:
            sigma, ps1, ps2 = rec
            p0, p0_known = 0.0, False
        for name, val in (("p(s1)", ps1), ("p(s2)", ps2)):
            if abs(val) > eps * (1.0 + 1e-9):
                raise PreconditionError(f"|{name}| = {abs(val)} exceeds eps")
        if sigma == 0:
            # constant polynomial: value pinned by either sample
            sup = abs(ps2)
            out.append({"sigma": 0, "B": {0: sup / eps if eps else 0.0},
                        "coeffs": {0: ps2}, "sup_bound": sup})
            continue
        # p(t) = c0 + c1 t + c2 t^2 (c2 = 0 when sigma = 1)
        if sigma == 1:
            # two samples determine c1 given c0
            def solve(c0):
                c1 = (ps2 - c0) / s2
                return np.array([c0, c1, 0.0])
        else:
            def solve(c0):
                A = np.array([[s1, s1 * s1], [s2, s2 * s2]])
                rhs = np.array([ps1 - c0, ps2 - c0])
                c1, c2 = np.linalg.solve(A, rhs)
                return np.array([c0, c1, c2])

        cands = [solve(p0)] if p0_known else [solve(-eps), solve(0.0), solve(eps)]
        ts = np.linspace(0.0, s2, 512)
        sup = 0.0
        cmax = np.zeros(3)
        for c in cands:
            vals = c[0] + c[1] * ts + c[2] * ts * ts
            sup = max(sup, float(np.max(np.abs(vals))))
            cmax = np.maximum(cmax, np.abs(c))
        if not p0_known:
            cmax[0] = eps
            sup = max(sup, eps)
        from math import comb

        B = {}
        coeffs = {}
        for i in range(sigma + 1):
            # coefficient of t^i is b^{sigma-i} * C(sigma, i)
            bco = cmax[i] / comb(sigma, i)
            B[i] = bco * s2 ** i / eps if eps else 0.0
            coeffs[i] = (solve(p0)[i] / comb(sigma, i)) if p0_known else None
        out.append({"sigma": sigma, "B": B, "coeffs": coeffs,
                    "sup_bound": sup})
    return out
