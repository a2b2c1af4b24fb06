"""Time-change functions on the quotient and their cocycles.

A TimeChangeFn is 1 + amplitude * sum over lattice translates of a smooth
compactly-supported bump on SL(2,R).  The lattice sum makes the value depend
only on the coset, the compact support makes the sum finite, and smoothness
gives the C^1 regularity the drift estimates need.  The cocycles are

    z(y, t)  = integral_0^t tau(u^s y) ds          (additive cocycle)
    xi(y, t) = the inverse:  z(y, xi(y, t)) = t,

and the drift comparison objects are

    Delta_r(t)        = t - t/(1+rt)
    Delta^tau_r(y, t) = z(ubar^r y, t) - z(y, t/(1+rt)).

Quadrature walks the orbit in fixed steps with re-reduction (so matrix
entries stay bounded) and integrates each step with a Gauss-Legendre rule;
the integrand is smooth along the orbit because the bump sum sees every
lattice translate that could become active.
"""

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .config import DEFAULT_TOLS
from .errors import DomainError, HorizonError, NumericalError
from .homogeneous_space import QuotientPoint, reduce
from .shear_kernel import delta_r, u_mat, ubar_mat

__all__ = [
    "TimeChangeFn",
    "make_bump_time_change",
    "evaluate",
    "z_cocycle",
    "xi_inverse",
    "birkhoff_deviation",
    "delta_tau",
    "ratner_estimate_survey",
    "coboundary_residual",
    "haar_sample",
    "thick_part_sample",
]

# 8-point Gauss-Legendre on [0, 1]
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS

_STEP = 0.25  # re-reduction stride along the orbit


@lru_cache(maxsize=None)
def _integer_ball(max_entry):
    """All SL(2,Z) matrices with |entries| <= max_entry, stacked."""
    out = []
    rng_vals = range(-max_entry, max_entry + 1)
    for a in rng_vals:
        for b in rng_vals:
            for c in rng_vals:
                bc1 = 1 + b * c
                if a == 0:
                    if bc1 == 0:
                        for d in rng_vals:
                            out.append((0, b, c, d))
                    continue
                if bc1 % a == 0:
                    d = bc1 // a
                    if abs(d) <= max_entry:
                        out.append((a, b, c, d))
    arr = np.array(out, dtype=float).reshape(-1, 2, 2)
    arr.setflags(write=False)
    return arr


def _bump(u):
    """Quartic bump (1-u)^4 on [0,1), zero beyond: C^3, compact support.

    Along a unipotent orbit the squared radial argument u(s) is a quadratic
    polynomial in s, so each translate contributes a piecewise degree-8
    polynomial; the 8-point Gauss rule integrates those exactly away from
    the (C^3) support boundary.
    """
    v = np.clip(1.0 - u, 0.0, None)
    v2 = v * v
    return v2 * v2


@dataclass(frozen=True, eq=False)
class TimeChangeFn:
    """1 + amplitude * (lattice-summed bump); positive, bounded, coset-defined."""

    amplitude: float
    center: np.ndarray      # bump center frame g0 in SL(2,R)
    width: float            # support radius in Frobenius distance
    ball: np.ndarray        # (B, 2, 2) lattice translates used in the sum
    inf_bound: float
    sup_bound: float
    mean_estimate: float    # Monte Carlo estimate of the Haar mean
    mean_se: float

    def values(self, reps):
        """Vectorized evaluation on stacked representatives.

        Only lattice translates that can reach the bump support contribute:
        ||rep gamma - g0|| < width forces ||gamma||_F <= ||rep||_F *
        (||g0||_F + width), so the ball is prefiltered by that bound
        (sigma_min(rep) = 1/||rep|| for det-1 2x2 matrices).
        """
        reps = np.asarray(reps, dtype=float).reshape(-1, 2, 2)
        if self.amplitude == 0.0:
            return np.ones(len(reps))
        out = np.ones(len(reps))
        # ||rep g - g0||^2 = <rep^T rep, g g^T> - 2 <g, rep^T g0> + ||g0||^2:
        # two (m,4)x(4,b) BLAS products, no (m,b,2,2) intermediate
        ball_norms = np.sqrt(np.sum(self.ball * self.ball, axis=(1, 2)))
        order_b = np.argsort(ball_norms)
        ball_sorted = self.ball[order_b]
        bnorm_sorted = ball_norms[order_b]
        ggt = np.einsum("bij,bkj->bik", ball_sorted, ball_sorted).reshape(-1, 4)
        ball_flat = ball_sorted.reshape(-1, 4)
        c2 = float(np.sum(self.center ** 2))
        center_reach = np.sqrt(c2) + self.width
        rep_norms = np.sqrt(np.sum(reps * reps, axis=(1, 2)))
        order = np.argsort(rep_norms)
        w2 = self.width * self.width
        budget = 2 ** 23  # cap on reps-in-chunk x translates-in-sub-ball
        lo = 0
        while lo < len(reps):
            hi = min(lo + 65536, len(reps))
            while True:
                reach = rep_norms[order[hi - 1]] * center_reach + 1e-9
                nb = int(np.searchsorted(bnorm_sorted, reach, side="right"))
                if nb == 0 or (hi - lo) * nb <= budget or hi == lo + 1:
                    break
                hi = lo + max(1, budget // max(nb, 1))
            idx = order[lo:hi]
            if nb > 0:
                block = reps[idx]
                gram = np.einsum("mji,mjk->mik", block, block).reshape(-1, 4)
                cross = np.einsum("mji,jk->mik", block, self.center).reshape(-1, 4)
                lhs = np.concatenate([gram, -2.0 * cross], axis=1)      # (m, 8)
                rhs = np.concatenate([ggt[:nb], ball_flat[:nb]], axis=1)  # (b, 8)
                raw = lhs @ rhs.T                                        # (m, b)
                rows, cols = np.nonzero(raw < w2 - c2)
                if len(rows):
                    v = 1.0 - (raw[rows, cols] + c2) / w2
                    v2 = v * v
                    sums = np.bincount(rows, weights=v2 * v2,
                                       minlength=len(idx))
                    out[idx] += self.amplitude * sums
            lo = hi
        return out

    def __call__(self, x):
        return float(self.values(x.rep[None, :, :])[0])


def evaluate(tau, x):
    """Value at a quotient point; witness-independent because reps are canonical."""
    if not isinstance(x, QuotientPoint):
        raise DomainError("evaluate expects a QuotientPoint")
    return tau(x)


def haar_sample(rng, n, y_max=None):
    """Sample canonical frames from the Haar probability measure on the quotient.

    z is drawn from the hyperbolic area measure on the fundamental domain
    (x uniform, y by inverse CDF of y^-2), the frame angle uniformly.
    Optional y_max restricts to the thick part by rejection.
    """
    pts = []
    while len(pts) < n:
        x = rng.uniform(-0.5, 0.5)
        y0 = np.sqrt(max(1.0 - x * x, 0.0))
        y = y0 / (1.0 - rng.uniform(0.0, 1.0))
        if x * x + y * y < 1.0:
            continue
        if y_max is not None and y > y_max:
            continue
        theta = rng.uniform(0.0, np.pi)
        sy = np.sqrt(y)
        frame = np.array([[sy, 0.0], [x / sy, 1.0 / sy]]) @ np.array(
            [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
        )
        pts.append(reduce(frame))
    return pts


def thick_part_sample(rng, n, y_max=2.0):
    return haar_sample(rng, n, y_max=y_max)


def make_bump_time_change(
    amplitude,
    width=0.5,
    center=None,
    ball_entry=12,
    mean_samples=4000,
    seed=20260810,
):
    """Construct the standard lattice-summed bump time change.

    The amplitude is capped so inf tau >= 1/2.  The Haar mean is estimated by
    Monte Carlo (seeded) and stored with its standard error.
    """
    if center is None:
        # frame over z = 2i, pointing up: comfortably inside the domain
        center = np.array([[np.sqrt(2.0), 0.0], [0.0, 1.0 / np.sqrt(2.0)]])
    ball = _integer_ball(ball_entry)
    probe = TimeChangeFn(
        amplitude=amplitude, center=center, width=width, ball=ball,
        inf_bound=0.0, sup_bound=np.inf, mean_estimate=1.0, mean_se=0.0,
    )
    # measure the max of the summed bump on a deterministic dense sample
    rng = np.random.default_rng(seed)
    sample = haar_sample(rng, 2000, y_max=6.0)
    reps = np.array([p.rep for p in sample])
    if amplitude != 0.0:
        bump_sum = (probe.values(reps) - 1.0) / amplitude
        s_star = float(np.max(bump_sum)) * 1.1 + 1e-9
    else:
        s_star = 1.0
    if amplitude < 0 and 1.0 - abs(amplitude) * s_star < 0.5:
        raise DomainError(
            f"amplitude {amplitude} drives inf tau below 1/2 "
            f"(measured translate-sum max ~ {s_star:.3f})"
        )
    inf_bound = 1.0 if amplitude >= 0 else 1.0 - abs(amplitude) * s_star
    sup_bound = 1.0 + max(0.0, amplitude) * s_star
    vals = probe.values(reps)
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
    return TimeChangeFn(
        amplitude=amplitude, center=center, width=width, ball=ball,
        inf_bound=inf_bound, sup_bound=sup_bound,
        mean_estimate=mean, mean_se=se,
    )


def _walk_bases(y, t, step=_STEP):
    """Stride base representatives along s -> u^s y (scalar fast path).

    Returns (bases (S,2,2) array, final base tuple, remainder).  Entries stay
    bounded because each stride is re-reduced; the determinant is
    renormalized periodically to absorb rounding drift.
    """
    from .homogeneous_space import _reduce_scalar

    sign = 1.0 if t >= 0 else -1.0
    t_abs = abs(t)
    n_full = int(np.floor(t_abs / step + 1e-12))
    rem = t_abs - n_full * step
    h = sign * step
    a, b, c, d = y.rep[0, 0], y.rep[0, 1], y.rep[1, 0], y.rep[1, 1]
    bases = np.empty((n_full, 2, 2))
    for k in range(n_full):
        bases[k, 0, 0] = a
        bases[k, 0, 1] = b
        bases[k, 1, 0] = c
        bases[k, 1, 1] = d
        # u(h) @ base, then reduce
        a, b, c, d, *_ = _reduce_scalar(a, b, c + h * a, d + h * b)
        if k % 256 == 255:
            det = a * d - b * c
            s = np.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
    return bases, (a, b, c, d), rem


def _orbit_nodes(y, t, step=_STEP):
    """Reps at Gauss nodes along s -> u^s y for s in [0, t] (signed).

    Walks stride bases sequentially with re-reduction (entries stay bounded),
    then expands all Gauss nodes in one batched multiplication.  Returns
    (reps, weights) with integral = sum(w_i * tau(rep_i)), weights signed.
    """
    sign = 1.0 if t >= 0 else -1.0
    bases, last, rem = _walk_bases(y, t, step)
    n_full = len(bases)
    node_mats = np.array([u_mat(sign * nd * step) for nd in _GL_NODES])
    if n_full:
        reps = np.einsum("nij,sjk->snik", node_mats, bases).reshape(-1, 2, 2)
        weights = np.tile(_GL_WEIGHTS * step, n_full)
    else:
        reps = np.zeros((0, 2, 2))
        weights = np.zeros(0)
    if rem > 1e-15:
        base = np.array(last).reshape(2, 2)
        tail = np.array([u_mat(sign * nd * rem) @ base for nd in _GL_NODES])
        reps = np.concatenate([reps, tail]) if len(reps) else tail
        weights = np.concatenate([weights, _GL_WEIGHTS * rem])
    return reps, sign * weights


def z_cocycle(tau, y, t):
    """z(y, t) = integral of tau along the unipotent orbit up to time t.

    Composite Gauss-Legendre with re-reduction every 0.25 time units; a
    half-step Richardson check guards the first stride and raises with a
    subdivision report if the rule is not converged.
    """
    if t == 0.0:
        return 0.0
    if tau.amplitude == 0.0:
        return float(t)
    reps, weights = _orbit_nodes(y, t)
    if len(reps) == 0:
        return float(t)
    vals = tau.values(reps)
    out = float(np.sum(weights * vals))
    # convergence guard on the leading stride
    h0 = min(_STEP, abs(t))
    direct = _integrate_one(tau, y.rep, h0 * np.sign(t))
    halves = _integrate_one(tau, y.rep, 0.5 * h0 * np.sign(t))
    base2 = reduce(u_mat(0.5 * h0 * np.sign(t)) @ y.rep).rep
    halves += _integrate_one(tau, base2, 0.5 * h0 * np.sign(t))
    if abs(direct - halves) > 100.0 * DEFAULT_TOLS.quadrature_per_unit:
        raise NumericalError(
            f"quadrature not converged on leading stride: "
            f"|direct - split| = {abs(direct - halves):.3e}"
        )
    return out


def _integrate_one(tau, base_rep, h):
    reps = np.array([u_mat(node * h) @ base_rep for node in _GL_NODES])
    return float(h * np.sum(_GL_WEIGHTS * tau.values(reps)))


def xi_inverse(tau, y, t, horizon_factor=4.0):
    """Solve z(y, xi) = t by stride-walking with an in-stride bisection."""
    if t == 0.0:
        return 0.0
    if tau.amplitude == 0.0:
        return float(t)
    sign = 1.0 if t > 0 else -1.0
    target = abs(t)
    horizon = horizon_factor * (target / tau.inf_bound + 1.0)
    acc = 0.0
    base = y.rep
    walked = 0.0
    while walked < horizon:
        mass = abs(_integrate_one(tau, base, sign * _STEP))
        if acc + mass >= target - 1e-15:
            # crossing inside this stride: bisect the partial step
            lo, hi = 0.0, _STEP
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                part = abs(_integrate_one(tau, base, sign * mid))
                if acc + part >= target:
                    hi = mid
                else:
                    lo = mid
                if hi - lo < 1e-14 * max(1.0, walked):
                    break
            return sign * (walked + 0.5 * (lo + hi))
        acc += mass
        base = reduce(u_mat(sign * _STEP) @ base).rep
        walked += _STEP
    raise HorizonError(f"no bracket for z = {t} within horizon {horizon}")


def birkhoff_deviation(tau, y, t_grid, normalize=True):
    """|t - z(y,t)| on a grid plus the fitted log-log slope.

    Uses the mean-normalized tau (Birkhoff averages then center about 1).
    Returns {t, deviation, slope, slope_ci} with a 95% band from the
    least-squares residuals.  The slope is reported, never asserted.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    m = tau.mean_estimate if normalize else 1.0
    devs = []
    for t in t_grid:
        devs.append(abs(t - z_cocycle(tau, y, t) / m))
    devs = np.array(devs)
    mask = devs > 0
    if np.sum(mask) >= 3:
        lx, ly = np.log(t_grid[mask]), np.log(devs[mask])
        A = np.vstack([lx, np.ones_like(lx)]).T
        coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
        slope = float(coef[0])
        dof = max(len(lx) - 2, 1)
        sigma2 = float(res[0]) / dof if len(res) else 0.0
        sx = float(np.sum((lx - lx.mean()) ** 2))
        half = 1.96 * np.sqrt(sigma2 / max(sx, 1e-300))
        ci = (slope - half, slope + half)
    else:
        slope, ci = float("nan"), (float("nan"), float("nan"))
    return {"t": t_grid, "deviation": devs, "slope": slope, "slope_ci": ci}


def delta_tau(tau, y, r, t):
    """Drift of the time-changed flow: z(ubar^r y, t) - z(y, t/(1+rt))."""
    denom = 1.0 + r * t
    if denom <= 0.0:
        from .errors import SingularityError

        raise SingularityError(f"1 + rt = {denom} <= 0")
    if tau.amplitude == 0.0:
        return delta_r(r, t)
    y_bar = reduce(ubar_mat(r) @ y.rep)
    return z_cocycle(tau, y_bar, t) - z_cocycle(tau, y, t / denom)


def ratner_estimate_survey(
    tau,
    eps_target,
    sample_size,
    t_range,
    rt_max=0.1,
    seed=0,
    y_max=2.0,
):
    """Empirical distribution of |Delta^tau - Delta| / |Delta|.

    Samples y from the thick part, t log-uniform in t_range, and r with
    |rt| <= rt_max (sign random).  Degenerate samples (|Delta| below
    tolerance) are excluded and counted.  Returns a JSON-ready report; the
    quantiles are the deliverable, no per-point bound is claimed.
    """
    rng = np.random.default_rng(seed)
    ys = thick_part_sample(rng, sample_size, y_max=y_max)
    lo, hi = t_range
    rel = []
    excluded = 0
    for y in ys:
        t = float(np.exp(rng.uniform(np.log(lo), np.log(hi))))
        rho = rng.uniform(0.01, rt_max) * (1.0 if rng.uniform() < 0.5 else -1.0)
        r = rho / t
        d_plain = delta_r(r, t)
        if abs(d_plain) < DEFAULT_TOLS.degenerate_delta:
            excluded += 1
            continue
        d_tau = delta_tau(tau, y, r, t)
        rel.append(abs(d_tau - d_plain) / abs(d_plain))
    rel = np.sort(np.array(rel))

    def q(p):
        return float(np.quantile(rel, p)) if len(rel) else float("nan")

    report = {
        "config": {
            "amplitude": tau.amplitude,
            "eps_target": eps_target,
            "sample_size": sample_size,
            "t_range": [lo, hi],
            "rt_max": rt_max,
            "y_max": y_max,
        },
        "seed": seed,
        "quantiles": {"p50": q(0.50), "p90": q(0.90), "p99": q(0.99)},
        "fraction_below_target": float(np.mean(rel < eps_target)) if len(rel) else 0.0,
        "excluded_count": excluded,
        "n_effective": int(len(rel)),
    }
    return report


def survey_to_json(report):
    return json.dumps(report, sort_keys=True, indent=2)


def curve_to_csv(rows, header):
    """Serialize (t, value) style curves deterministically (LF, repr floats)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (int, float, np.floating))
                    else v for v in row])
    return buf.getvalue()


def coboundary_residual(tau1, tau2, F, y, T_grid):
    """|int_0^T (tau1 - tau2)(u^t y) dt - (F(u^T y) - F(y))| on the grid."""
    out = []
    F0 = F(y)
    from .homogeneous_space import flow

    for T in np.asarray(T_grid, dtype=float):
        integral = z_cocycle(tau1, y, T) - z_cocycle(tau2, y, T)
        boundary = F(flow(y, "u", T)) - F0
        out.append((float(T), abs(integral - boundary)))
    return out
