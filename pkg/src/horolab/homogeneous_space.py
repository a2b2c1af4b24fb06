"""The desk-scale quotient of SL(2,R) by SL(2,Z), with flows and distances.

Points are right cosets g*Gamma, reduced to a canonical representative.  The
projection to the upper half plane uses the transpose Moebius action

    z(g) = (a i + c) / (b i + d),      g = [[a, b], [c, d]],

a RIGHT action: z(g gamma) = f_gamma(z(g)).  Consequently the classical
T/S reduction of z (z -> z -+ 1 and z -> -1/z) corresponds to right
multiplication by [[1,0],[-+1,1]] and [[0,1],[-1,0]], left multiplication by
flow matrices descends to the quotient, and z(exp(tU) g) is the Moebius
image of z(g) under the flow.  Representatives are canonical in PSL (sign
fixed deterministically), so quotient-level quantities computed from `rep`
are witness-independent by construction.

The frame metric is the right-invariant d_G(g, h) = ||log(g h^{-1})||_F
inside the log chart (||g h^{-1} - I|| < 0.5), with a monotone Frobenius
surrogate outside it.  Right invariance is what makes d(g, g gamma) measure
the conjugated displacement g gamma g^{-1} and shrink in the cusp.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .config import DEFAULT_TOLS
from .errors import DomainError, NumericalError

__all__ = [
    "QuotientPoint",
    "reduce",
    "flow",
    "distance",
    "injectivity_proxy",
    "group_distance",
    "word_ball",
    "FLOW_GENERATORS",
]

_T_PLUS = np.array([[1, 0], [1, 1]], dtype=np.int64)    # z -> z + 1
_T_MINUS = np.array([[1, 0], [-1, 1]], dtype=np.int64)  # z -> z - 1
_S = np.array([[0, 1], [-1, 0]], dtype=np.int64)        # z -> -1/z

FLOW_GENERATORS = {
    "u": lambda t: np.array([[1.0, 0.0], [t, 1.0]]),
    "ubar": lambda t: np.array([[1.0, t], [0.0, 1.0]]),
    "a": lambda t: np.array([[np.exp(t / 2.0), 0.0], [0.0, np.exp(-t / 2.0)]]),
}


@dataclass(frozen=True, eq=False)
class QuotientPoint:
    """Canonical coset representative, its reducing witness, and z = z(rep)."""

    rep: np.ndarray      # (2,2) float, det 1, z(rep) in the fundamental domain
    witness: np.ndarray  # (2,2) integer matrix with original = rep @ witness
    z: complex

    @property
    def im(self):
        return self.z.imag


def _z_of(g):
    a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    num = complex(c, a)
    den = complex(d, b)
    return num / den


def _reduce_scalar(a, b, c, d, max_iter=10 ** 5):
    """Scalar core of the reduction; returns (a, b, c, d, word entries).

    The word (wa, wb, wc, wd) is the accumulated integer right factor with
    reduced = original @ word.
    """
    tol = DEFAULT_TOLS.reduction
    wa, wb, wc, wd = 1, 0, 0, 1
    # z = (a i + c) / (b i + d)
    den = b * b + d * d
    zr = (a * b + c * d) / den
    zi = (a * d - b * c) / den
    it = 0
    while it < max_iter:
        it += 1
        moved = False
        m = np.floor(zr + 0.5)
        if m != 0.0:
            mi = int(m)
            # right-multiply by [[1,0],[-m,1]]
            a, c = a - mi * b, c - mi * d
            wa, wc = wa - mi * wb, wc - mi * wd
            zr -= m
            moved = True
        zz2 = zr * zr + zi * zi
        if zz2 < (1.0 - tol) ** 2 or (zz2 < (1.0 + tol) ** 2 and zr > tol):
            # right-multiply by S = [[0,1],[-1,0]]
            a, b = -b, a
            c, d = -d, c
            wa, wb = -wb, wa
            wc, wd = -wd, wc
            zr, zi = -zr / zz2, zi / zz2
            moved = True
        if not moved:
            break
    else:
        raise NumericalError("fundamental-domain reduction did not terminate")
    if zr > 0.5 - tol:
        a, c = a - b, c - d
        wa, wc = wa - wb, wc - wd
    # canonical sign in PSL: bottom row's first significant entry positive
    key = c if abs(c) > 1e-12 else d
    if key < 0:
        a, b, c, d = -a, -b, -c, -d
        wa, wb, wc, wd = -wa, -wb, -wc, -wd
    return a, b, c, d, wa, wb, wc, wd


def reduce(g, max_iter=10 ** 5):
    """Reduce g to its canonical fundamental-domain representative.

    Classical continued-fraction style: translate Re(z) into [-1/2, 1/2),
    invert while |z| < 1; on the circle boundary prefer Re(z) <= 0.
    """
    g = np.asarray(g, dtype=float)
    a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    det = a * d - b * c
    if abs(det - 1.0) > 1e-8:
        raise DomainError(f"det must be 1 to 1e-8, got {det}")
    s = np.sqrt(det)  # remove accumulated drift exactly once
    a, b, c, d = a / s, b / s, c / s, d / s
    a, b, c, d, wa, wb, wc, wd = _reduce_scalar(a, b, c, d, max_iter)
    rep = np.array([[a, b], [c, d]])
    # witness: original = rep @ word^{-1}
    witness = np.array([[wd, -wb], [-wc, wa]], dtype=np.int64)
    return QuotientPoint(rep=rep, witness=witness, z=_z_of(rep))


def flow(x, which, t):
    """Left-translate the representative by a one-parameter flow and reduce."""
    if which not in FLOW_GENERATORS:
        raise DomainError(f"unknown flow {which!r}; use u, ubar or a")
    return reduce(FLOW_GENERATORS[which](t) @ x.rep)


def group_distance(g, h):
    """Right-invariant frame metric d_G(g, h).

    ||log(g h^{-1})||_F inside the chart ||g h^{-1} - I|| < 0.5, else the
    Frobenius surrogate ||g h^{-1} - I||_F + log cond(g h^{-1}).
    """
    m = np.asarray(g, dtype=float) @ _inv2(np.asarray(h, dtype=float))
    dev = m - np.eye(2)
    fro = float(np.linalg.norm(dev))
    if fro < DEFAULT_TOLS.log_chart_cutoff:
        return float(np.linalg.norm(_logm2(m)))
    sv = np.linalg.svd(m, compute_uv=False)
    cond = sv[0] / max(sv[-1], 1e-300)
    return fro + float(np.log(cond))


def _inv2(m):
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def _logm2(m):
    """Principal log of a real 2x2 matrix near the identity (inverse scaling
    and squaring on the Mercator series)."""
    k = 0
    a = m.copy()
    # square-root until close enough for the series
    while np.linalg.norm(a - np.eye(2)) > 0.25 and k < 60:
        a = _sqrtm2(a)
        k += 1
    x = a - np.eye(2)
    term = x.copy()
    out = np.zeros((2, 2))
    for j in range(1, 30):
        out = out + term / j * (1 if j % 2 == 1 else -1)
        term = term @ x
        if np.max(np.abs(term)) < 1e-18:
            break
    return out * (2.0 ** k)


def _sqrtm2(m):
    """Principal square root of a real 2x2 matrix with positive trace route.

    For det-1 matrices near I: sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)).
    """
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    s = np.sqrt(abs(det))
    tr = m[0, 0] + m[1, 1]
    denom = tr + 2.0 * s
    if denom <= 0:
        raise NumericalError("matrix square root outside principal branch")
    return (m + s * np.eye(2)) / np.sqrt(denom)


@lru_cache(maxsize=None)
def word_ball(cap):
    """All PSL(2,Z)-distinct products of <= cap generators {T^{+-1}, S}.

    Returns an (N, 2, 2) int64 array including the identity, sign-normalized.
    """
    if cap < 0:
        raise DomainError("word_cap must be >= 0")
    gens = [_T_PLUS, _T_MINUS, _S]

    def key(m):
        # canonical sign in PSL: first nonzero of (c, d, a, b) positive
        for v in (m[1, 0], m[1, 1], m[0, 0], m[0, 1]):
            if v != 0:
                if v < 0:
                    m = -m
                break
        return tuple(m.ravel()), m

    seen = {}
    frontier = [np.eye(2, dtype=np.int64)]
    k0, m0 = key(frontier[0])
    seen[k0] = m0
    for _ in range(cap):
        nxt = []
        for m in frontier:
            for gmat in gens:
                cand = m @ gmat
                k, canon = key(cand)
                if k not in seen:
                    seen[k] = canon
                    nxt.append(canon)
        frontier = nxt
        if not frontier:
            break
    out = np.array(list(seen.values()), dtype=np.int64)
    out.setflags(write=False)
    return out


def _min_displacement(g, targets):
    """min over rows of d_G(g, target); vectorized over the stacked targets.

    Uses ||log m|| >= log(1 + ||m - I||) to prune: candidates are visited in
    order of Frobenius deviation and the scan stops once no remaining one
    can beat the current best.
    """
    m = np.einsum("ij,njk->nik", g, _inv_batch(targets))
    dev = m - np.eye(2)[None, :, :]
    fro = np.sqrt(np.sum(dev * dev, axis=(1, 2)))
    best = np.inf
    cutoff = DEFAULT_TOLS.log_chart_cutoff
    for i in np.argsort(fro):
        if np.log1p(fro[i]) >= best:
            break
        if fro[i] < cutoff:
            best = min(best, float(np.linalg.norm(_logm2(m[i]))))
        else:
            sv = np.linalg.svd(m[i], compute_uv=False)
            best = min(best, fro[i] + float(np.log(sv[0] / max(sv[-1], 1e-300))))
    return float(best)


def distance(x1, x2, word_cap=10):
    """Upper bound on the quotient distance: min over the word ball of
    d_G(rep1, rep2 gamma).  Exact for nearby points in the thick part."""
    ball = word_ball(word_cap).astype(float)
    targets = np.concatenate(
        [np.einsum("ij,njk->nik", x2.rep, ball),
         np.einsum("ij,njk->nik", x2.rep, -ball)]
    )
    return _min_displacement(x1.rep, targets)


def _inv_batch(ms):
    out = np.empty_like(ms)
    out[:, 0, 0] = ms[:, 1, 1]
    out[:, 0, 1] = -ms[:, 0, 1]
    out[:, 1, 0] = -ms[:, 1, 0]
    out[:, 1, 1] = ms[:, 0, 0]
    det = ms[:, 0, 0] * ms[:, 1, 1] - ms[:, 0, 1] * ms[:, 1, 0]
    return out / det[:, None, None]


def injectivity_proxy(x, word_cap=8):
    """Half the minimal displacement d_G(rep, rep gamma) over nontrivial gamma.

    Positive by discreteness; shrinks like 1/Im(z) in the cusp.
    """
    ball = word_ball(word_cap)
    nontrivial = np.array(
        [g for g in ball
         if not (abs(g[0, 0]) == 1 and g[0, 1] == 0 and g[1, 0] == 0)],
        dtype=float,
    )
    targets = np.concatenate(
        [np.einsum("ij,njk->nik", x.rep, nontrivial),
         np.einsum("ij,njk->nik", x.rep, -nontrivial)]
    )
    return 0.5 * _min_displacement(x.rep, targets)
