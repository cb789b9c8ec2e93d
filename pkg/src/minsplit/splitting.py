"""Fixed-point iterations for zeros of sums of maximally monotone operators.

The centrepiece is the minimal-memory splitting for ``n >= 2`` operators: it
iterates on ``n-1`` coupled blocks, calls each resolvent exactly once per
sweep, and relaxes with a factor ``gamma``.  For ``n = 2`` it reduces to the
relaxed Douglas-Rachford iteration.  Also here: the three-operator scheme of
Ryu, its divergent four-operator extension (kept as a regression witness),
the product-space Douglas-Rachford method, and a sampling check of the
three-term averagedness inequality that underpins convergence.

Conventions: a lifted point is an ``(n-1, dim)`` array of blocks, resolvent
outputs are ``(n, dim)``.  The reported residual is ``||z_next - z|| / gamma``,
which equals the norm of the stacked differences ``x_{i+1} - x_i``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .problems import Prng
from .trace import ResidualTrace

DIVERGENCE_CAP = 1e12


@dataclass
class SplitState:
    """Iterate snapshot: lifted point, last resolvent outputs, residual."""

    z: np.ndarray
    x: np.ndarray
    k: int
    residual: float


@dataclass
class SolveReport:
    """Outcome of a fixed-point solve."""

    converged: bool
    iterations: int
    final_x: np.ndarray
    trace: ResidualTrace
    consensus_spread: float
    diverged: bool = False
    state: SplitState = None


def relaxed_update(z_block, x_next, x_prev, gamma):
    """One block of ``z + gamma * (x_next - x_prev)``.

    At ``gamma == 1`` this is computed as ``x_next + (z - x_prev)`` so that
    the zero-operator case (where ``x_prev == z`` exactly) performs an exact
    permutation of the block values, as the underlying operator is then an
    isometry.
    """
    if gamma == 1.0:
        return x_next + (z_block - x_prev)
    return z_block + gamma * (x_next - x_prev)


def chain_argument(lead, z_prev, x_prev):
    """Resolvent argument ``lead + (x_prev - z_prev)`` with fixed grouping.

    The grouping makes the identity-resolvent case exact: when
    ``x_prev == z_prev`` bit for bit, the argument is exactly ``lead``.
    """
    return lead + (x_prev - z_prev)


def consensus_spread(x):
    """Largest pairwise distance ``max_{i,j} ||x_i - x_j||`` between blocks."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[1] == 1:
        col = x[:, 0]
        return float(col.max() - col.min())
    diffs = x[:, None, :] - x[None, :, :]
    return float(np.sqrt((diffs**2).sum(axis=2)).max())


def _check_gamma(gamma, lo, hi, include_hi):
    ok = lo < gamma <= hi if include_hi else lo < gamma < hi
    if not ok:
        bracket = "]" if include_hi else ")"
        raise ParameterError(f"gamma must lie in ({lo}, {hi}{bracket}, got {gamma}")


def _lifted(z, blocks, dim, name="z"):
    if z is None:
        if dim is None:
            raise ParameterError(f"provide {name} or dim")
        return np.zeros((blocks, dim))
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if z.ndim != 2 or z.shape[0] != blocks:
        raise ShapeError(f"{name} must have {blocks} blocks, got shape {z.shape}")
    return z


def mt_step(z, ops, gamma):
    """One sweep of the minimal-memory splitting.

    Parameters
    ----------
    z : ndarray, shape (n-1, dim)
        Current lifted point.
    ops : sequence of MonotoneOp
        The ``n >= 2`` operators, each used through its resolvent once.
    gamma : float
        Relaxation parameter in (0, 1]; plain convergence theory needs
        gamma < 1, the boundary case is driven by :func:`pr_solve`.

    Returns
    -------
    (z_next, x) : pair of ndarray
        Updated lifted point ``(n-1, dim)`` and resolvent outputs ``(n, dim)``.
    """
    n = len(ops)
    if n < 2:
        raise ParameterError(f"need at least 2 operators, got {n}")
    _check_gamma(gamma, 0.0, 1.0, include_hi=True)
    z = _lifted(z, n - 1, None)
    x = np.empty((n, z.shape[1]))
    x[0] = ops[0].resolvent(z[0])
    for i in range(1, n - 1):
        x[i] = ops[i].resolvent(chain_argument(z[i], z[i - 1], x[i - 1]))
    x[n - 1] = ops[n - 1].resolvent(chain_argument(x[0], z[n - 2], x[n - 2]))
    if gamma == 1.0:
        z_next = x[1:] + (z - x[:-1])
    else:
        z_next = z + gamma * (x[1:] - x[:-1])
    return z_next, x


def _scalar_capable(ops, z):
    return z.shape[1] == 1 and all(hasattr(op, "resolvent_scalar") for op in ops)


def _mt_solve_scalar(ops, gamma, z0, tol, max_iter, stop_on_spread):
    # Pure-float mirror of the array loop; identical operation order, so the
    # produced values match the array path and the network simulator exactly.
    n = len(ops)
    z = [float(v) for v in z0[:, 0]]
    trace = ResidualTrace(["residual", "spread"])
    converged = False
    diverged = False
    x = [0.0] * n
    k = 0
    for k in range(1, max_iter + 1):
        x[0] = ops[0].resolvent_scalar(z[0])
        for i in range(1, n - 1):
            x[i] = ops[i].resolvent_scalar(z[i] + (x[i - 1] - z[i - 1]))
        x[n - 1] = ops[n - 1].resolvent_scalar(x[0] + (x[n - 2] - z[n - 2]))
        sq = 0.0
        if gamma == 1.0:
            z_next = [x[i + 1] + (z[i] - x[i]) for i in range(n - 1)]
        else:
            z_next = [z[i] + gamma * (x[i + 1] - x[i]) for i in range(n - 1)]
        for a, b in zip(z, z_next):
            d = a - b
            sq += d * d
        residual = math.sqrt(sq) / gamma
        spread = max(x) - min(x)
        trace.append(k, {"residual": residual, "spread": spread})
        z = z_next
        if residual > DIVERGENCE_CAP:
            diverged = True
            break
        if (spread if stop_on_spread else residual) <= tol:
            converged = True
            break
    z_arr = np.asarray(z)[:, None]
    x_arr = np.asarray(x)[:, None]
    state = SplitState(z=z_arr, x=x_arr, k=k, residual=trace.last("residual"))
    return SolveReport(
        converged=converged,
        iterations=k,
        final_x=x_arr[0].copy(),
        trace=trace,
        consensus_spread=trace.last("spread"),
        diverged=diverged,
        state=state,
    )


def _split_solve(ops, gamma, z0, tol, max_iter, dim, stop_on_spread=False):
    if tol < 0:
        raise ParameterError(f"tol must be nonnegative, got {tol}")
    z = _lifted(z0, len(ops) - 1, dim)
    if _scalar_capable(ops, z):
        return _mt_solve_scalar(ops, gamma, z, tol, max_iter, stop_on_spread)
    trace = ResidualTrace(["residual", "spread"])
    converged = False
    diverged = False
    x = None
    k = 0
    for k in range(1, max_iter + 1):
        z_next, x = mt_step(z, ops, gamma)
        residual = float(np.linalg.norm(z_next - z)) / gamma
        spread = consensus_spread(x)
        trace.append(k, {"residual": residual, "spread": spread})
        z = z_next
        if residual > DIVERGENCE_CAP:
            diverged = True
            break
        if (spread if stop_on_spread else residual) <= tol:
            converged = True
            break
    state = SplitState(z=z, x=x, k=k, residual=trace.last("residual"))
    return SolveReport(
        converged=converged,
        iterations=k,
        final_x=x[0].copy(),
        trace=trace,
        consensus_spread=trace.last("spread"),
        diverged=diverged,
        state=state,
    )


def mt_solve(ops, gamma=0.9, z0=None, tol=1e-8, max_iter=100000, dim=None):
    """Iterate :func:`mt_step` until the residual drops below ``tol``.

    Parameters
    ----------
    ops : sequence of MonotoneOp
    gamma : float
        Relaxation in (0, 1).  The boundary ``gamma = 1`` is only sound
        under uniform monotonicity and is reached through :func:`pr_solve`.
    z0 : ndarray or None
        Initial lifted point; defaults to all zeros (``dim`` then required).
    tol : float
        Threshold on the residual ``||z_next - z|| / gamma``.
    max_iter : int
    dim : int or None
        Block dimension when ``z0`` is omitted.

    Returns
    -------
    SolveReport
        ``final_x`` is the first resolvent output of the last sweep;
        ``converged=False`` (no exception) when ``max_iter`` is exhausted.
    """
    _check_gamma(gamma, 0.0, 1.0, include_hi=False)
    return _split_solve(ops, gamma, z0, tol, max_iter, dim)


def pr_solve(ops, z0=None, tol=1e-8, max_iter=100000, moduli=None, dim=None):
    """The boundary case ``gamma = 1`` under declared uniform monotonicity.

    Operators ``2..n`` should be uniformly monotone for convergence; their
    moduli may be declared in ``moduli`` (positive floats) for validation.
    Progress is certified by the consensus spread of the resolvent outputs
    rather than averagedness, and the solve reports ``converged=False``
    when the spread never falls below ``tol`` (e.g. for plainly monotone
    operators, where the iteration may be an isometry).
    """
    if moduli is not None:
        if len(moduli) != len(ops) - 1:
            raise ParameterError(
                f"expected {len(ops) - 1} moduli for operators 2..n, got {len(moduli)}"
            )
        if any(b <= 0 for b in moduli):
            raise ParameterError("declared moduli must be positive")
    return _split_solve(ops, 1.0, z0, tol, max_iter, dim, stop_on_spread=True)


def dr_step(z, op1, op2, gamma):
    """One relaxed Douglas-Rachford step on a single lifted block.

    ``x1 = J_1(z)``, ``x2 = J_2(2 x1 - z)``, ``z_next = z + gamma (x2 - x1)``
    with ``gamma`` in (0, 2).
    """
    _check_gamma(gamma, 0.0, 2.0, include_hi=False)
    z = np.asarray(z, dtype=np.float64)
    x1 = op1.resolvent(z)
    x2 = op2.resolvent(2.0 * x1 - z)
    return z + gamma * (x2 - x1), x1, x2


def ryu3_step(z, ops, gamma):
    """One step of Ryu's three-operator scheme on two lifted blocks."""
    if len(ops) != 3:
        raise ParameterError(f"scheme takes exactly 3 operators, got {len(ops)}")
    _check_gamma(gamma, 0.0, 1.0, include_hi=False)
    z = _lifted(z, 2, None)
    x = np.empty((3, z.shape[1]))
    x[0] = ops[0].resolvent(z[0])
    x[1] = ops[1].resolvent(z[1] + x[0])
    x[2] = ops[2].resolvent(x[0] - z[0] + x[1] - z[1])
    z_next = z + gamma * (x[2] - x[:2])
    return z_next, x


def ryu3_solve(ops, gamma=0.9, z0=None, tol=1e-8, max_iter=100000, dim=None):
    """Iterate :func:`ryu3_step`; reporting mirrors :func:`mt_solve`."""
    z = _lifted(z0, 2, dim)
    trace = ResidualTrace(["residual", "spread"])
    converged = False
    diverged = False
    x = None
    k = 0
    for k in range(1, max_iter + 1):
        z_next, x = ryu3_step(z, ops, gamma)
        residual = float(np.linalg.norm(z_next - z)) / gamma
        spread = consensus_spread(x)
        trace.append(k, {"residual": residual, "spread": spread})
        z = z_next
        if residual > DIVERGENCE_CAP:
            diverged = True
            break
        if residual <= tol:
            converged = True
            break
    state = SplitState(z=z, x=x, k=k, residual=trace.last("residual"))
    return SolveReport(
        converged=converged,
        iterations=k,
        final_x=x[0].copy(),
        trace=trace,
        consensus_spread=trace.last("spread"),
        diverged=diverged,
        state=state,
    )


def ryu4_step(z, ops, gamma):
    """The four-operator extension of Ryu's scheme on three lifted blocks.

    Kept as a regression witness: with four merely monotone operators its
    fixed-point iteration can diverge geometrically (rate ``1 + gamma`` on
    the zero-operator instance), although any fixed point it does have still
    encodes a zero of the sum.  With a 1-strongly monotone fourth operator
    the iteration becomes averaged and converges.
    """
    if len(ops) != 4:
        raise ParameterError(f"scheme takes exactly 4 operators, got {len(ops)}")
    if gamma <= 0:
        raise ParameterError(f"gamma must be positive, got {gamma}")
    z = _lifted(z, 3, None)
    x = np.empty((4, z.shape[1]))
    x[0] = ops[0].resolvent(z[0])
    x[1] = ops[1].resolvent(z[1] + x[0])
    x[2] = ops[2].resolvent(x[1] - x[0] - z[2])
    x[3] = ops[3].resolvent(x[0] - z[0] + x[1] - z[1] + x[2] + z[2])
    z_next = z + gamma * (x[3] - x[:3])
    return z_next, x


def product_dr_solve(ops, gamma=0.9, z0=None, tol=1e-8, max_iter=100000, dim=None):
    """Douglas-Rachford on the product space with the diagonal constraint.

    Each iteration projects onto the diagonal (blockwise mean), reflects,
    applies the blockwise resolvents, and relaxes by ``gamma`` in (0, 1].
    Uses ``n`` lifted blocks; for ``n = 1`` it is the relaxed proximal point
    algorithm.  The solution estimate is the blockwise mean of the lifted
    point.
    """
    _check_gamma(gamma, 0.0, 1.0, include_hi=True)
    n = len(ops)
    z = _lifted(z0, n, dim)
    trace = ResidualTrace(["residual", "spread"])
    converged = False
    diverged = False
    k = 0
    x = z.copy()
    for k in range(1, max_iter + 1):
        p = z.mean(axis=0)
        refl = 2.0 * p - z
        for i in range(n):
            x[i] = ops[i].resolvent(refl[i])
        z_next = z + gamma * (x - p)
        residual = float(np.linalg.norm(z_next - z)) / gamma
        spread = consensus_spread(x)
        trace.append(k, {"residual": residual, "spread": spread})
        z = z_next
        if residual > DIVERGENCE_CAP:
            diverged = True
            break
        if residual <= tol:
            converged = True
            break
    final_x = z.mean(axis=0)
    state = SplitState(z=z, x=x, k=k, residual=trace.last("residual"))
    return SolveReport(
        converged=converged,
        iterations=k,
        final_x=final_x,
        trace=trace,
        consensus_spread=trace.last("spread"),
        diverged=diverged,
        state=state,
    )


def averagedness_check(ops, gamma, trials, dim=None, seed=0):
    """Sample the three-term averagedness inequality on random point pairs.

    For random pairs ``(z, z_bar)`` the quantity

    ``||Tz - Tz_bar||^2 + (1-gamma)/gamma ||r - r_bar||^2
    + 1/gamma ||sum_i r_i - sum_i r_bar_i||^2 - ||z - z_bar||^2``

    with ``r = z - Tz`` must be nonpositive up to roundoff.  Returns the
    worst relative slack ``max (lhs - rhs) / (1 + ||z - z_bar||^2)`` over
    the sampled pairs; a genuinely averaged map keeps this near machine
    precision, while a non-averaged map exposes positive slack quickly.
    """
    _check_gamma(gamma, 0.0, 1.0, include_hi=True)
    n = len(ops)
    if dim is None:
        dim = 1
    prng = Prng(seed)
    worst = -np.inf
    for _ in range(trials):
        z = prng.normals((n - 1) * dim).reshape(n - 1, dim)
        z_bar = prng.normals((n - 1) * dim).reshape(n - 1, dim)
        tz, _ = mt_step(z, ops, gamma)
        tz_bar, _ = mt_step(z_bar, ops, gamma)
        r = z - tz
        r_bar = z_bar - tz_bar
        lhs = float(np.linalg.norm(tz - tz_bar) ** 2)
        if gamma < 1.0:
            lhs += (1.0 - gamma) / gamma * float(np.linalg.norm(r - r_bar) ** 2)
        lhs += float(np.linalg.norm((r - r_bar).sum(axis=0)) ** 2) / gamma
        rhs = float(np.linalg.norm(z - z_bar) ** 2)
        worst = max(worst, (lhs - rhs) / (1.0 + rhs))
    return worst
