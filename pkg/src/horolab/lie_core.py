"""Exact construction of so(n,1): basis, brackets, exponentials, sl2-triple.

Conventions.  Work in the defining (n+1)-dimensional representation with the
quadratic form J = diag(I_n, -1).  Membership: m in so(n,1) iff J m^T J = -m;
g in SO(n,1) iff J g^T J g = I.  The canonical basis is

    Y_k      = [[0, e_k], [e_k^T, 0]]                    (k = 1..n, symmetric)
    Theta_ij = [[E_ji - E_ij, 0], [0, 0]]                (1 <= i < j <= n)

ordered Y_1..Y_n then Theta_ij lexicographic in (i, j).  The distinguished
nilpotents are

    U    = Y_{n-1} - Theta_{n-1,n},      Ubar = Y_{n-1} + Theta_{n-1,n},

which satisfy [Y_n, U] = -U, [Y_n, Ubar] = +Ubar and [U, Ubar] = -2 Y_n
(the -2 is an oracle-checked fact, not an assumption; see tests).
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLS
from .errors import DomainError

__all__ = [
    "LieElement",
    "GroupElement",
    "Sl2Triple",
    "make_basis",
    "make_sl2_triple",
    "bracket",
    "exp_group",
    "iota_sl2",
    "minkowski_form",
    "ad_matrix",
    "basis_matrices",
]


def minkowski_form(n):
    """The form J = diag(I_n, -1) defining SO(n,1)."""
    J = np.eye(n + 1)
    J[n, n] = -1.0
    return J


def _check_rank(n):
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise DomainError(f"rank must be an integer >= 2, got {n!r}")


@lru_cache(maxsize=None)
def basis_matrices(n):
    """Stacked (D, n+1, n+1) array of the canonical basis, D = n(n+1)/2."""
    _check_rank(n)
    mats = []
    for k in range(1, n + 1):
        Y = np.zeros((n + 1, n + 1))
        Y[k - 1, n] = 1.0
        Y[n, k - 1] = 1.0
        mats.append(Y)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            T = np.zeros((n + 1, n + 1))
            T[j - 1, i - 1] = 1.0
            T[i - 1, j - 1] = -1.0
            mats.append(T)
    out = np.array(mats)
    out.setflags(write=False)
    return out


def _coords_from_mat(n, mat):
    # every basis matrix has Frobenius norm sqrt(2), and they are orthogonal
    B = basis_matrices(n)
    return np.tensordot(B, mat, axes=([1, 2], [0, 1])) / 2.0


def _mat_from_coords(n, coords):
    B = basis_matrices(n)
    return np.tensordot(np.asarray(coords, dtype=float), B, axes=(0, 0))


@dataclass(frozen=True, eq=False)
class LieElement:
    """Element of so(n,1) stored as matrix plus canonical-basis coordinates."""

    n: int
    mat: np.ndarray
    coords: np.ndarray

    @classmethod
    def from_mat(cls, n, mat, check=True):
        mat = np.asarray(mat, dtype=float)
        if mat.shape != (n + 1, n + 1):
            raise DomainError(f"expected {(n+1, n+1)} matrix, got {mat.shape}")
        if check:
            J = minkowski_form(n)
            resid = np.max(np.abs(J @ mat.T @ J + mat))
            if resid > 1e-8:
                raise DomainError(f"matrix is not in so(n,1): residual {resid:.3e}")
        return cls(n, mat, _coords_from_mat(n, mat))

    @classmethod
    def from_coords(cls, n, coords):
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (n * (n + 1) // 2,):
            raise DomainError(
                f"expected {n*(n+1)//2} coordinates, got shape {coords.shape}"
            )
        return cls(n, _mat_from_coords(n, coords), coords)

    def membership_residual(self):
        J = minkowski_form(self.n)
        return float(np.max(np.abs(J @ self.mat.T @ J + self.mat)))

    def round_trip_residual(self):
        return float(
            np.max(np.abs(_mat_from_coords(self.n, self.coords) - self.mat))
        )

    @property
    def norm(self):
        """Trace-form norm sqrt(tr(m m^T)) (Frobenius)."""
        return float(np.linalg.norm(self.mat))

    def __add__(self, other):
        _same_rank(self, other)
        return LieElement(self.n, self.mat + other.mat, self.coords + other.coords)

    def __sub__(self, other):
        _same_rank(self, other)
        return LieElement(self.n, self.mat - other.mat, self.coords - other.coords)

    def __mul__(self, scalar):
        s = float(scalar)
        return LieElement(self.n, self.mat * s, self.coords * s)

    __rmul__ = __mul__


def _same_rank(a, b):
    if a.n != b.n:
        raise DomainError(f"rank mismatch: {a.n} vs {b.n}")


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Element of SO(n,1) in the defining representation."""

    n: int
    mat: np.ndarray

    @classmethod
    def from_mat(cls, n, mat, check=True):
        mat = np.asarray(mat, dtype=float)
        if check:
            resid = cls._residual(n, mat)
            if resid > 1e-7:
                raise DomainError(f"matrix is not in SO(n,1): residual {resid:.3e}")
        return cls(n, mat)

    @staticmethod
    def _residual(n, mat):
        J = minkowski_form(n)
        orth = np.max(np.abs(J @ mat.T @ J @ mat - np.eye(n + 1)))
        return float(max(orth, abs(np.linalg.det(mat) - 1.0)))

    def membership_residual(self):
        return self._residual(self.n, self.mat)

    def __matmul__(self, other):
        _same_rank(self, other)
        return GroupElement(self.n, self.mat @ other.mat)

    def inv(self):
        J = minkowski_form(self.n)
        # J g^T J = g^{-1} exactly on the group; cheaper and stabler than inv()
        return GroupElement(self.n, J @ self.mat.T @ J)


@dataclass(frozen=True, eq=False)
class Sl2Triple:
    """The distinguished triple {U, H = Y_n, Ubar} generating SO(2,1) inside SO(n,1)."""

    U: LieElement
    H: LieElement
    Ubar: LieElement

    @property
    def n(self):
        return self.U.n


def make_basis(n):
    """Canonical ordered basis of so(n,1): Y_1..Y_n then Theta_ij, (i,j) lex."""
    _check_rank(n)
    return [LieElement.from_mat(n, m, check=False) for m in basis_matrices(n)]


def make_sl2_triple(n):
    """Build the explicit U, Ubar from e_{n-1} blocks, with H = Y_n."""
    _check_rank(n)
    U = np.zeros((n + 1, n + 1))
    U[n - 2, n - 1] = 1.0
    U[n - 2, n] = 1.0
    U[n - 1, n - 2] = -1.0
    U[n, n - 2] = 1.0
    Ub = np.zeros((n + 1, n + 1))
    Ub[n - 2, n - 1] = -1.0
    Ub[n - 2, n] = 1.0
    Ub[n - 1, n - 2] = 1.0
    Ub[n, n - 2] = 1.0
    H = np.zeros((n + 1, n + 1))
    H[n - 1, n] = 1.0
    H[n, n - 1] = 1.0
    return Sl2Triple(
        U=LieElement.from_mat(n, U),
        H=LieElement.from_mat(n, H),
        Ubar=LieElement.from_mat(n, Ub),
    )


def bracket(a, b):
    """Matrix commutator [a, b] = ab - ba."""
    _same_rank(a, b)
    m = a.mat @ b.mat - b.mat @ a.mat
    return LieElement(a.n, m, _coords_from_mat(a.n, m))


def _nilpotency_degree(mat, max_power):
    """Smallest k <= max_power with ||mat^k|| < 1e-14, or None."""
    p = np.eye(mat.shape[0])
    for k in range(1, max_power + 1):
        p = p @ mat
        if np.max(np.abs(p)) < 1e-14:
            return k
    return None


def exp_group(a, t=1.0):
    """exp(t a) as a GroupElement.

    Uses the exact terminating series when t*a is nilpotent (degree detected
    numerically), otherwise scaling-and-squaring Pade via scipy.
    """
    m = t * a.mat
    k = _nilpotency_degree(a.mat, a.n + 2)
    if k is not None:
        out = np.eye(a.n + 1)
        term = np.eye(a.n + 1)
        for j in range(1, k):
            term = term @ m / j
            out = out + term
    else:
        out = scipy.linalg.expm(m)
    return GroupElement(a.n, out)


# dphi on the standard sl2 generators: f = [[0,0],[1,0]] -> U,
# h = [[1,0],[0,-1]] -> 2 Y_n, e = [[0,1],[0,0]] -> Ubar.  This is the unique
# choice under which exp of a lower-triangular unipotent with entry t maps to
# exp(tU) and diag(e^{w/2}, e^{-w/2}) maps to exp(w Y_n).
def _diota(n, v2):
    triple = make_sl2_triple(n)
    e, f = v2[0, 1], v2[1, 0]
    h = v2[0, 0]  # traceless: v2[1,1] = -h
    return (f * triple.U.mat) + (2.0 * h * triple.H.mat) + (e * triple.Ubar.mat)


def iota_sl2(h, n=2):
    """Two-to-one isogeny SL(2,R) -> SO(2,1) inside SO(n,1).

    Computed log-free through the polar decomposition h = k p: the rotation k
    maps through the compact one-parameter subgroup exp(phi(Ubar - U)), the
    positive-definite factor p through exp of dphi(log p).  iota(-I) = I.
    """
    h = np.asarray(h, dtype=float)
    if h.shape != (2, 2):
        raise DomainError(f"expected 2x2 matrix, got {h.shape}")
    det = float(np.linalg.det(h))
    if abs(det - 1.0) > 1e-10:
        raise DomainError(f"det must be 1 to 1e-10, got {det}")
    _check_rank(n)
    # polar: p = (h^T h)^{1/2}, k = h p^{-1}
    w, V = np.linalg.eigh(h.T @ h)
    w = np.clip(w, 1e-300, None)
    p_log = V @ np.diag(0.5 * np.log(w)) @ V.T  # symmetric traceless
    k = h @ (V @ np.diag(w ** -0.5) @ V.T)
    phi = float(np.arctan2(k[0, 1], k[0, 0]))  # k = [[c, s], [-s, c]]
    triple = make_sl2_triple(n)
    rot = exp_group(triple.Ubar - triple.U, phi)
    pos = exp_group(LieElement.from_mat(n, _diota(n, p_log)), 1.0)
    return rot @ pos


def ad_matrix(a, basis=None):
    """Matrix of ad(a) acting on canonical coordinates."""
    n = a.n
    B = basis_matrices(n)
    # ad(a) applied to every basis matrix, then re-expanded in coordinates
    br = a.mat[None, :, :] @ B - B @ a.mat[None, :, :]
    return np.tensordot(br, B, axes=([1, 2], [1, 2])).T / 2.0
