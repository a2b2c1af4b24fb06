"""Central tolerance record.

Every numerical tolerance used by the library lives here so property tests
have a single tuning surface.  The defaults are the contract values; tests
import them rather than re-declaring magic numbers.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # algebra membership / structure
    membership: float = 1e-12        # J m^T J = -m residual, per entry
    group_membership: float = 1e-10  # J g^T J g = I and det residuals
    bracket: float = 1e-12           # exact bracket identities ([Y_n,U]=-U, Jacobi)
    round_trip: float = 1e-12        # coords <-> matrix round trip, per entry

    # adjoint formulas and weight structure
    adjoint_formula: float = 1e-9    # coefficient formula vs matrix conjugation
    weight_grading: float = 1e-9     # eigenvalue / string residuals
    kernel_svd: float = 1e-10        # singular values treated as zero
    projection: float = 1e-12        # idempotence of centralizer projection

    # group-level identities
    one_parameter: float = 1e-10     # exp((s+t)a) = exp(sa)exp(ta)
    isogeny: float = 1e-9            # iota(h h') = iota(h) iota(h')
    commutation: float = 1e-12       # u^t ubar^r = ubar^. a^. u^. entrywise

    # interval solvers
    endpoint_abs: float = 1e-6       # bisection refinement of interval endpoints
    s_max: float = 1e6               # horizon for closeness-interval solvers
    conditioning: float = 1e12       # max condition number for bound recovery

    # quotient space
    reduction: float = 1e-9          # fundamental-domain boundary tolerance
    witness_integrality: float = 1e-6
    rep_equality: float = 1e-8       # flow equivariance / semigroup checks
    log_chart_cutoff: float = 0.5    # ||g h^{-1} - I||_F below this uses log chart

    # cocycles and quadrature
    quadrature_per_unit: float = 1e-9
    cocycle: float = 1e-7
    inversion: float = 1e-8          # |z(y, xi) - t|
    degenerate_delta: float = 1e-12  # |Delta| below this is excluded from surveys

    # root finding
    first_time_grid_lo: float = 1e-6
    first_time_grid_hi: float = 1e9
    relative_root: float = 1e-8


DEFAULT_TOLS = Tolerances()
