"""Weight decomposition of so(n,1) under the distinguished sl2-triple.

The adjoint action of {U, Y_n, Ubar} splits so(n,1) into irreducible strings
v_0..v_sigma with

    ad(U) v_i = (i+1) v_{i+1},      ad(Y_n) v_i = ((sigma - 2i)/2) v_i,

one string being the sl2 itself (sigma = 2, top parallel to U) and the rest
("vperp") having sigma in {0, 2}.  The centralizer of U is spanned by the
top vectors of all strings.  Strings are scaled so every top vector has unit
trace-form norm; the top vectors then form an orthonormal basis of the
centralizer and norm thresholds on fastest relative motions are reproducible.
"""

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from .config import DEFAULT_TOLS
from .errors import DomainError, NoCrossingError, NumericalError, RangeError
from .lie_core import LieElement, Sl2Triple, ad_matrix, make_sl2_triple

__all__ = [
    "WeightModule",
    "CentralizerSplit",
    "Decomposition",
    "decompose",
    "adjoint_u",
    "adjoint_a",
    "centralizer_split",
    "project_centralizer",
    "fastest_motion",
    "first_time_norm",
]


@dataclass(frozen=True, eq=False)
class WeightModule:
    """One sl2-irreducible summand: highest weight sigma and basis v_0..v_sigma."""

    sigma: int
    basis: tuple  # tuple[LieElement]
    tag: str      # "sl2" | "vperp"

    @property
    def dim(self):
        return self.sigma + 1


@dataclass(frozen=True, eq=False)
class CentralizerSplit:
    """C_g(U) = R U + k-part (compact, so(n-2)) + n-part (nilpotent, R^{n-2})."""

    u_axis: LieElement
    k_part: tuple
    n_part: tuple

    @property
    def dim(self):
        return 1 + len(self.k_part) + len(self.n_part)


class Decomposition:
    """Cached weight decomposition for one rank, with coordinate machinery."""

    def __init__(self, n, triple, modules):
        self.n = n
        self.triple = triple
        self.modules = modules
        D = n * (n + 1) // 2
        cols = []
        self._slices = []
        start = 0
        for mod in modules:
            for v in mod.basis:
                cols.append(v.coords)
            self._slices.append(slice(start, start + mod.dim))
            start += mod.dim
        self._to_canonical = np.array(cols).T  # (D, D)
        if self._to_canonical.shape != (D, D):
            raise NumericalError(
                f"weight basis has wrong size {self._to_canonical.shape}"
            )
        self._to_weight = np.linalg.inv(self._to_canonical)

    def weight_coords(self, x):
        """Coefficients of x on the concatenated weight basis."""
        return self._to_weight @ x.coords

    def module_coefficients(self, x):
        """List of per-module coefficient vectors (b_0..b_sigma)."""
        w = self.weight_coords(x)
        return [w[s] for s in self._slices]

    def from_module_coefficients(self, coeffs):
        w = np.concatenate([np.asarray(c, dtype=float) for c in coeffs])
        return LieElement.from_coords(self.n, self._to_canonical @ w)


def _string_down(adU, top, sigma, tol):
    """Complete v_sigma..v_0 downward by least squares on ad(U) x = (i+1) v_{i+1}."""
    vs = [top]
    cur = top
    for i in range(sigma - 1, -1, -1):
        sol, *_ = np.linalg.lstsq(adU, (i + 1) * cur, rcond=tol)
        resid = np.linalg.norm(adU @ sol - (i + 1) * cur)
        if resid > 1e-8:
            raise NumericalError(
                f"string completion failed at index {i}: residual {resid:.3e}"
            )
        vs.append(sol)
        cur = sol
    vs.reverse()
    return vs  # v_0 .. v_sigma


def _canonical_sign(vec):
    i = int(np.argmax(np.abs(vec)))
    return vec if vec[i] >= 0 else -vec


@lru_cache(maxsize=None)
def _decompose_cached(n):
    triple = make_sl2_triple(n)
    tols = DEFAULT_TOLS
    adU = ad_matrix(triple.U)
    adH = ad_matrix(triple.H)
    D = n * (n + 1) // 2

    # kernel of ad(U) = span of all top vectors
    _, s_svd, vt = np.linalg.svd(adU)
    rank = int(np.sum(s_svd >= tols.kernel_svd))
    ker = vt[rank:].T  # (D, dim ker), orthonormal columns

    # grade the kernel by the ad(Y_n) eigenvalue: -1 -> tops of sigma=2
    # strings, 0 -> trivial modules
    M = ker.T @ adH @ ker
    evals, evecs = np.linalg.eigh(M)
    bad = np.abs(np.round(evals) - evals) > tols.weight_grading
    if np.any(bad) or np.any(evals > tols.weight_grading):
        raise NumericalError(
            f"eigen-grading failed: kernel ad(Y_n) eigenvalues {evals}"
        )
    minus = ker @ evecs[:, np.abs(evals + 1) < 0.5]   # dim n-1
    zero = ker @ evecs[:, np.abs(evals) < 0.5]        # dim (n-2)(n-3)/2

    # separate the U-axis from the vperp sigma=2 tops inside the -1 eigenspace
    u_dir = triple.U.coords / np.linalg.norm(triple.U.coords)
    proj = minus - np.outer(u_dir, u_dir @ minus)
    up, sp, _ = np.linalg.svd(proj, full_matrices=False)
    vperp_tops = [
        _canonical_sign(up[:, i]) for i in range(len(sp)) if sp[i] > tols.kernel_svd
    ]

    def unit_top(c):
        # coords are orthogonal with squared matrix norm 2: ||m||_F = sqrt(2)|c|
        m = LieElement.from_coords(n, c)
        return c / m.norm

    modules = []
    # the sl2 string: top parallel to U, unit trace-form norm
    sl2_string = _string_down(adU, unit_top(u_dir), 2, tols.kernel_svd)
    modules.append(
        WeightModule(
            2, tuple(LieElement.from_coords(n, v) for v in sl2_string), "sl2"
        )
    )
    for top in vperp_tops:
        string = _string_down(adU, unit_top(top), 2, tols.kernel_svd)
        modules.append(
            WeightModule(
                2, tuple(LieElement.from_coords(n, v) for v in string), "vperp"
            )
        )
    for i in range(zero.shape[1]):
        c = unit_top(_canonical_sign(zero[:, i]))
        modules.append(
            WeightModule(0, (LieElement.from_coords(n, c),), "vperp")
        )

    dim = sum(m.dim for m in modules)
    if dim != D:
        raise NumericalError(f"module dimensions sum to {dim}, expected {D}")
    return Decomposition(n, triple, tuple(modules))


def decompose(n, triple=None):
    """Split so(n,1) into sl2-irreducible weight modules.

    `triple` is accepted for interface symmetry; the decomposition is fully
    determined by the rank, so results are cached per n.
    """
    dec = _decompose_cached(n)
    if triple is not None and not isinstance(triple, Sl2Triple):
        raise DomainError("triple must be an Sl2Triple")
    return dec


def adjoint_u(t, b):
    """Coefficients of Ad(exp tU) acting on a weight string.

    c_j = sum_{i<=j} b_i C(j,i) t^{j-i}.
    """
    b = np.asarray(b, dtype=float)
    sigma = len(b) - 1
    c = np.zeros_like(b)
    for j in range(sigma + 1):
        c[j] = sum(b[i] * comb(j, i) * t ** (j - i) for i in range(j + 1))
    return c


def adjoint_a(omega, b):
    """Coefficients of Ad(exp omega Y_n): c_j = b_j e^{(sigma-2j) omega/2}."""
    b = np.asarray(b, dtype=float)
    sigma = len(b) - 1
    if abs(omega) * sigma / 2.0 > 700.0:
        raise RangeError(f"exp overflow: |omega|*sigma/2 = {abs(omega)*sigma/2}")
    j = np.arange(sigma + 1)
    return b * np.exp((sigma - 2 * j) * omega / 2.0)


def centralizer_split(n, triple=None):
    """Split C_g(U) into R U, the compact k-part and the nilpotent n-part."""
    dec = decompose(n, triple)
    u_axis = dec.modules[0].basis[-1]  # unit multiple of U
    k_part = tuple(m.basis[0] for m in dec.modules if m.sigma == 0)
    n_part = tuple(
        m.basis[-1] for m in dec.modules if m.sigma == 2 and m.tag == "vperp"
    )
    return CentralizerSplit(u_axis=u_axis, k_part=k_part, n_part=n_part)


def project_centralizer(x, dec=None):
    """Keep the top-vector coefficient of every module, zero the rest."""
    if dec is None:
        dec = decompose(x.n)
    coeffs = dec.module_coefficients(x)
    kept = []
    for mod, b in zip(dec.modules, coeffs):
        out = np.zeros_like(b)
        out[-1] = b[-1]
        kept.append(out)
    return dec.from_module_coefficients(kept)


def _top_polynomials(dec, v, drop_weight0=False):
    """(module, poly) pairs: top coefficient of Ad(exp LU)v as np.poly1d in L."""
    polys = []
    for mod, b in zip(dec.modules, dec.module_coefficients(v)):
        if drop_weight0 and mod.sigma == 0:
            continue
        s = mod.sigma
        # c_sigma(L) = sum_i b_i C(sigma, i) L^{sigma-i}; poly1d wants
        # highest degree first -> coefficient of L^{sigma-i} is b_i C(sigma,i)
        coeffs = [b[i] * comb(s, i) for i in range(s + 1)]
        polys.append((mod, np.poly1d(coeffs)))
    return polys


def fastest_motion(v, L, dec=None, drop_weight0=False):
    """Centralizer component q(L) of Ad(exp LU) v.

    With drop_weight0=True returns the variant q'(L) that discards the
    weight-0 modules (their contribution never grows).
    """
    if dec is None:
        dec = decompose(v.n)
    out = []
    for mod, b in zip(dec.modules, dec.module_coefficients(v)):
        c = np.zeros_like(b)
        if not (drop_weight0 and mod.sigma == 0):
            c[-1] = adjoint_u(L, b)[-1]
        out.append(c)
    return dec.from_module_coefficients(out)


def first_time_norm(v, lam, dec=None):
    """Smallest t > 0 with ||q(t)|| = lam.

    The squared norm is a polynomial in t (top vectors are orthonormal), so a
    log-grid scan locates the first crossing and bisection refines it.
    Raises NoCrossingError when the norm never reaches lam on the scan range.
    """
    if lam <= 0:
        raise DomainError("target norm must be positive")
    if dec is None:
        dec = decompose(v.n)
    tols = DEFAULT_TOLS
    polys = _top_polynomials(dec, v)
    sq = np.poly1d([0.0])
    for _, p in polys:
        sq = sq + p * p

    def norm_at(t):
        return float(np.sqrt(max(sq(t), 0.0)))

    if norm_at(0.0) >= lam:
        return 0.0
    grid = np.logspace(
        np.log10(tols.first_time_grid_lo), np.log10(tols.first_time_grid_hi), 2000
    )
    prev_t = 0.0
    for t in grid:
        if norm_at(t) >= lam:
            lo, hi = prev_t, t
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if norm_at(mid) >= lam:
                    hi = mid
                else:
                    lo = mid
                if hi - lo <= tols.relative_root * max(hi, 1e-30):
                    break
            return 0.5 * (lo + hi)
        prev_t = t
    raise NoCrossingError(
        f"||q(t)|| stayed below {lam} up to t = {grid[-1]:.3e}"
    )
