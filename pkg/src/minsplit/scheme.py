"""Coefficient-matrix calculus for one-shot resolvent splitting schemes.

Any iteration that touches each resolvent exactly once and otherwise uses
only vector addition and scalar multiplication is captured by six constant
matrices acting blockwise on lifted points:

* ``y = B z + L x`` with ``L`` strictly lower triangular, fixing the inputs
  ``y_i`` of the resolvents (computable in index order);
* the update map ``T(z) = Tz z + Tx x``;
* the solution map ``S(z) = Sz z + Sx x``.

This module executes such schemes generically, certifies their structural
identities numerically (kernel residuals of a block matrix, the
consensus/averaging conditions of the solution map), and validates the
lifting dimension lower bound ``d >= n - 1`` for ``n >= 2``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotAFixedPointError, ParameterError, SchemeParseError, ShapeError
from .splitting import DIVERGENCE_CAP, consensus_spread
from .trace import format_float


@dataclass(frozen=True)
class SchemeMatrices:
    """The six coefficient matrices of a one-shot splitting scheme."""

    n: int
    d: int
    B: np.ndarray
    L: np.ndarray
    Tz: np.ndarray
    Tx: np.ndarray
    Sz: np.ndarray
    Sx: np.ndarray

    def __post_init__(self):
        n, d = self.n, self.d
        if n < 1 or d < 1:
            raise ParameterError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
        shapes = {
            "B": (n, d),
            "L": (n, n),
            "Tz": (d, d),
            "Tx": (d, n),
            "Sz": (1, d),
            "Sx": (1, n),
        }
        for name, want in shapes.items():
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != want:
                raise ShapeError(f"{name} must have shape {want}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            object.__setattr__(self, name, arr)
        if np.any(np.triu(self.L) != 0.0):
            raise ShapeError("L must be strictly lower triangular")


def mt_scheme(n, gamma=1.0):
    """Matrices of the minimal-memory splitting for ``n >= 2`` operators.

    ``gamma`` is folded into ``Tx``; ``gamma = 1`` gives the unrelaxed map
    (for ``n = 2`` this is the Douglas-Rachford operator).
    """
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    d = n - 1
    b = np.zeros((n, d))
    low = np.zeros((n, n))
    b[0, 0] = 1.0
    for i in range(1, n - 1):
        b[i, i] = 1.0
        b[i, i - 1] = -1.0
        low[i, i - 1] = 1.0
    b[n - 1, n - 2] = -1.0
    low[n - 1, 0] += 1.0
    low[n - 1, n - 2] += 1.0
    tx = np.zeros((d, n))
    for i in range(d):
        tx[i, i] = -gamma
        tx[i, i + 1] = gamma
    sx = np.zeros((1, n))
    sx[0, 0] = 1.0
    return SchemeMatrices(
        n=n,
        d=d,
        B=b,
        L=low,
        Tz=np.eye(d),
        Tx=tx,
        Sz=np.zeros((1, d)),
        Sx=sx,
    )


def ryu3_scheme(gamma):
    """Matrices of Ryu's three-operator scheme (two lifted blocks)."""
    b = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])
    low = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0]])
    tx = gamma * np.array([[-1.0, 0.0, 1.0], [0.0, -1.0, 1.0]])
    return SchemeMatrices(
        n=3,
        d=2,
        B=b,
        L=low,
        Tz=np.eye(2),
        Tx=tx,
        Sz=np.zeros((1, 2)),
        Sx=np.array([[1.0, 0.0, 0.0]]),
    )


def ryu4_scheme(gamma):
    """Matrices of the divergent four-operator extension (three blocks)."""
    b = np.array(
        [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
    )
    low = np.array(
        [
            [0.0, 0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [-1.0, 1.0, 0.0, 0.0],
            [1.0, 1.0, 1.0, 0.0],
        ]
    )
    tx = gamma * np.array(
        [[-1.0, 0.0, 0.0, 1.0], [0.0, -1.0, 0.0, 1.0], [0.0, 0.0, -1.0, 1.0]]
    )
    return SchemeMatrices(
        n=4,
        d=3,
        B=b,
        L=low,
        Tz=np.eye(3),
        Tx=tx,
        Sz=np.zeros((1, 3)),
        Sx=np.array([[1.0, 0.0, 0.0, 0.0]]),
    )


def eval_scheme(s, z, ops):
    """Run one generic scheme evaluation.

    Computes ``y_i`` in index order (the strict lower triangle of ``L``
    makes this well defined), applies each resolvent exactly once, and
    returns ``(T_out, S_out, x, y)`` where ``T_out = Tz z + Tx x`` and
    ``S_out = Sz z + Sx x``.
    """
    if len(ops) != s.n:
        raise ShapeError(f"scheme expects {s.n} operators, got {len(ops)}")
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    if z.shape[0] != s.d:
        raise ShapeError(f"z must have {s.d} blocks, got shape {z.shape}")
    dim = z.shape[1]
    x = np.zeros((s.n, dim))
    y = np.zeros((s.n, dim))
    for i in range(s.n):
        yi = s.B[i] @ z
        if i > 0:
            yi = yi + s.L[i, :i] @ x[:i]
        y[i] = yi
        x[i] = ops[i].resolvent(yi)
    t_out = s.Tz @ z + s.Tx @ x
    s_out = (s.Sz @ z + s.Sx @ x)[0]
    return t_out, s_out, x, y


@dataclass(frozen=True)
class KernelWitness:
    """Candidate kernel element ``v = (z, x, y, a)`` of the block identity matrix."""

    z: np.ndarray
    x: np.ndarray
    y: np.ndarray
    a: np.ndarray


def witness_from_point(s, z, ops):
    """Assemble a witness from a scheme evaluation at ``z``.

    The subgradient block is recovered as ``a = y - x``, which is the
    element of ``A(x)`` selected by the resolvent evaluations.
    """
    _, _, x, y = eval_scheme(s, z, ops)
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    return KernelWitness(z=z, x=x, y=y, a=y - x)


def kernel_residuals(s, w):
    """Block-row residual norms of the kernel identity at a witness.

    Returns ``(r1, r2, r3)`` with ``r1 = ||x - y + a||``,
    ``r2 = ||B z + L x - y||`` and ``r3 = ||(Tz - I) z + Tx x||``
    (Frobenius norms over blocks).  All three below tolerance certify the
    witness numerically: the point is fixed and the resolvent/subgradient
    data is consistent.
    """
    r1 = float(np.linalg.norm(w.x - w.y + w.a))
    r2 = float(np.linalg.norm(s.B @ w.z + s.L @ w.x - w.y))
    r3 = float(np.linalg.norm((s.Tz - np.eye(s.d)) @ w.z + s.Tx @ w.x))
    return r1, r2, r3


@dataclass(frozen=True)
class SolutionMappingReport:
    """Numerical check of the solution-map structure at a fixed point."""

    consensus_spread: float
    solution_vs_mean_y: float
    inclusion_residual: float
    solution: np.ndarray


def check_solution_mapping(s, ops, z_fixed, fp_tol=1e-8):
    """Verify the solution-map identities at a numerical fixed point.

    At any fixed point the resolvent outputs must agree across blocks, the
    solution map must equal the average of the resolvent inputs, and the
    recovered subgradients must sum to (numerically) zero.  Raises
    :class:`NotAFixedPointError` when ``||T(z) - z|| > fp_tol``.
    """
    t_out, s_out, x, y = eval_scheme(s, z_fixed, ops)
    z = np.asarray(z_fixed, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    drift = float(np.linalg.norm(t_out - z))
    if drift > fp_tol:
        raise NotAFixedPointError(
            f"||T(z) - z|| = {drift:.3e} exceeds fp_tol = {fp_tol:.3e}"
        )
    spread = float(np.max(np.linalg.norm(x - x[0], axis=1)))
    mean_y = y.mean(axis=0)
    s_vs_mean = float(np.linalg.norm(s_out - mean_y))
    inclusion = float(np.linalg.norm((y - x).sum(axis=0)))
    return SolutionMappingReport(
        consensus_spread=spread,
        solution_vs_mean_y=s_vs_mean,
        inclusion_residual=inclusion,
        solution=s_out,
    )


def lifting_ok(n, d):
    """True iff the lifting dimension is admissible: ``d >= n - 1`` for
    ``n >= 2`` and ``d >= 1`` for ``n = 1``."""
    if n >= 2:
        return d >= n - 1
    return d >= 1


def validate_lifting(s):
    """Dimension validator for the minimal-lifting lower bound.

    A ``False`` result means no scheme with these dimensions can solve all
    instances over this operator class; the library only warns because the
    matrices may still be useful on restricted problem families.
    """
    return lifting_ok(s.n, s.d)


def solve_scheme(s, ops, z0=None, tol=1e-10, max_iter=100000, dim=None):
    """Generic fixed-point iteration ``z <- Tz z + Tx x`` for a scheme.

    Returns ``(z, converged, diverged, iterations)``; ``converged`` means
    ``||T(z) - z|| <= tol``.
    """
    if z0 is None:
        if dim is None:
            raise ParameterError("provide z0 or dim")
        z = np.zeros((s.d, dim))
    else:
        z = np.asarray(z0, dtype=np.float64)
        if z.ndim == 1:
            z = z[:, None]
    converged = False
    diverged = False
    k = 0
    for k in range(1, max_iter + 1):
        z_next, _, _, _ = eval_scheme(s, z, ops)
        delta = float(np.linalg.norm(z_next - z))
        z = z_next
        if not np.isfinite(delta) or delta > DIVERGENCE_CAP:
            diverged = True
            break
        if delta <= tol:
            converged = True
            break
    return z, converged, diverged, k


def save_scheme(s, path):
    """Write a scheme to a plain-text file: header ``n d`` then the six
    matrix blocks (B, L, Tz, Tx, Sz, Sx), rows whitespace separated."""
    with open(path, "w") as fh:
        fh.write(f"{s.n} {s.d}\n")
        for name in ("B", "L", "Tz", "Tx", "Sz", "Sx"):
            arr = getattr(s, name)
            fh.write("\n")
            for row in arr:
                fh.write(" ".join(format_float(v) for v in row) + "\n")


def load_scheme(path):
    """Parse a scheme file written by :func:`save_scheme`.

    Raises :class:`SchemeParseError` with a 1-based line number on malformed
    input.
    """
    with open(path) as fh:
        raw = fh.readlines()
    lines = [
        (no, line.strip())
        for no, line in enumerate(raw, start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if not lines:
        raise SchemeParseError(1, "empty scheme file")
    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise SchemeParseError(no, f"header must be 'n d', got {header!r}")
    try:
        n, d = int(parts[0]), int(parts[1])
    except ValueError:
        raise SchemeParseError(no, f"header must contain two integers, got {header!r}")
    shapes = [("B", n, d), ("L", n, n), ("Tz", d, d), ("Tx", d, n), ("Sz", 1, d), ("Sx", 1, n)]
    cursor = 1
    blocks = {}
    for name, rows, cols in shapes:
        data = np.zeros((rows, cols))
        for r in range(rows):
            if cursor >= len(lines):
                raise SchemeParseError(
                    lines[-1][0], f"unexpected end of file while reading {name}"
                )
            no, line = lines[cursor]
            cursor += 1
            fields = line.split()
            if len(fields) != cols:
                raise SchemeParseError(
                    no, f"{name} row {r + 1} needs {cols} entries, got {len(fields)}"
                )
            try:
                data[r] = [float(f) for f in fields]
            except ValueError:
                raise SchemeParseError(no, f"non-numeric entry in {name} row {r + 1}")
        blocks[name] = data
    if cursor != len(lines):
        raise SchemeParseError(lines[cursor][0], "trailing content after Sx block")
    try:
        return SchemeMatrices(n=n, d=d, **blocks)
    except (ShapeError, ParameterError, ValueError) as exc:
        raise SchemeParseError(lines[0][0], str(exc))
