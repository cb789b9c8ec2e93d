"""Reproducible instance generators for experiments and property tests.

All randomness flows through :class:`Prng`, a counter-based splitmix64
generator with Box-Muller normal sampling.  The generator is implemented
with explicit 64-bit unsigned arithmetic so instances (and therefore the
CSV outputs built from them) are reproducible bit for bit from a seed.

Instances can be written to a plain-text format (a header line followed by
whitespace-separated matrix blocks) for regression against other
implementations; floats are stored in shortest round-trip form, so a
save/load cycle is exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .operators import AbsValue, AffineOp
from .trace import format_float

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


class Prng:
    """Counter-based splitmix64 pseudo-random generator.

    The k-th raw output is ``mix(seed + (k+1)*golden)`` where ``mix`` is the
    standard splitmix64 finaliser, so draws can be produced in bulk with
    vectorised uint64 arithmetic and are independent of platform.
    """

    def __init__(self, seed):
        self._seed = np.uint64(int(seed) & _MASK)
        self._count = 0

    def _raw(self, k):
        idx = np.arange(self._count + 1, self._count + k + 1, dtype=np.uint64)
        self._count += k
        z = self._seed + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniforms(self, k):
        """k uniforms in [0, 1) with 53-bit resolution."""
        return (self._raw(k) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normals(self, k):
        """k standard normals via Box-Muller pairs."""
        m = (k + 1) // 2
        raw = self._raw(2 * m)
        # u1 in (0, 1] so the logarithm is finite
        u1 = ((raw[:m] >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * 2.0**-53
        u2 = (raw[m:] >> np.uint64(11)).astype(np.float64) * 2.0**-53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:k]

    def normal_matrix(self, rows, cols):
        return self.normals(rows * cols).reshape(rows, cols)

    def subset(self, n, k):
        """Deterministic size-k subset of range(n), as a sorted index array."""
        order = np.argsort(self.uniforms(n), kind="stable")
        return np.sort(order[:k])


@dataclass(frozen=True)
class ConsensusInstance:
    """Targets for the scalar consensus problem ``min_x sum_i |x - c_i|``."""

    n: int
    c: np.ndarray
    seed: int

    def operators(self):
        """One absolute-value subdifferential per target."""
        return [AbsValue(np.array([ci])) for ci in self.c]

    def median_interval(self):
        """The closed interval of minimisers of ``sum_i |x - c_i|``."""
        s = np.sort(self.c)
        if self.n % 2 == 1:
            mid = s[self.n // 2]
            return float(mid), float(mid)
        return float(s[self.n // 2 - 1]), float(s[self.n // 2])


def gen_consensus(n, seed):
    """Standard-normal targets, deterministic from the seed."""
    if n < 2:
        raise ParameterError(f"need n >= 2, got {n}")
    prng = Prng(seed)
    return ConsensusInstance(n=n, c=prng.normals(n), seed=int(seed))


def cycle_laplacian(n):
    """Graph Laplacian of the n-cycle: 2 on the diagonal, -1 between neighbours."""
    if n < 3:
        raise ParameterError(f"cycle graph needs n >= 3 nodes, got {n}")
    lap = 2.0 * np.eye(n)
    idx = np.arange(n)
    lap[idx, (idx + 1) % n] = -1.0
    lap[idx, (idx - 1) % n] = -1.0
    return lap


@dataclass(frozen=True)
class RpcaInstance:
    """A partially observed low-rank-plus-sparse matrix recovery instance."""

    m: int
    n: int
    low_rank: np.ndarray
    sparse: np.ndarray
    omega: np.ndarray
    observed: np.ndarray
    seed: int
    sparse_frac: float
    obs_frac: float


def gen_rpca(m, n, seed, sparse_frac=0.15, obs_frac=0.40):
    """Checkerboard low-rank part, sparse normal corruption, random mask.

    The sparse support and the observation mask each contain exactly
    ``round(frac * m * n)`` entries, drawn as a random subset, so the
    realised fractions match the targets to within one entry.  Observed
    entries satisfy ``observed = low_rank + sparse`` on the mask and are
    zero elsewhere.
    """
    if m < 2 or n < 2:
        raise ParameterError(f"need m, n >= 2, got {m}x{n}")
    prng = Prng(seed)
    i, j = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    low_rank = ((i + j) % 2).astype(np.float64)

    k_sparse = round(sparse_frac * m * n)
    support = prng.subset(m * n, k_sparse)
    sparse = np.zeros(m * n)
    sparse[support] = prng.normals(k_sparse)
    sparse = sparse.reshape(m, n)

    k_obs = round(obs_frac * m * n)
    omega = np.zeros(m * n, dtype=bool)
    omega[prng.subset(m * n, k_obs)] = True
    omega = omega.reshape(m, n)

    observed = np.where(omega, low_rank + sparse, 0.0)
    return RpcaInstance(
        m=m,
        n=n,
        low_rank=low_rank,
        sparse=sparse,
        omega=omega,
        observed=observed,
        seed=int(seed),
        sparse_frac=sparse_frac,
        obs_frac=obs_frac,
    )


@dataclass(frozen=True)
class AffineMonotoneInstance:
    """Random affine monotone operators with a known zero of their sum."""

    dim: int
    mats: tuple
    offsets: tuple
    moduli: tuple
    solution: np.ndarray
    seed: int

    def operators(self):
        return [AffineOp(m, c) for m, c in zip(self.mats, self.offsets)]


def gen_affine_monotone(n_ops, dim, seed, moduli=None):
    """Operators ``x -> M_i x + c_i`` with ``M_i = P_i^T P_i + skew + beta_i I``.

    The offsets are chosen so that ``sum_i (M_i x* + c_i) = 0`` at a recorded
    point ``x*``; the Gram parts make the sum's symmetric part positive
    definite almost surely, so ``x*`` is the unique zero.
    """
    if dim < 1:
        raise ParameterError(f"dim must be >= 1, got {dim}")
    if n_ops < 1:
        raise ParameterError(f"n_ops must be >= 1, got {n_ops}")
    if moduli is None:
        moduli = (0.0,) * n_ops
    if len(moduli) != n_ops:
        raise ParameterError(f"expected {n_ops} moduli, got {len(moduli)}")
    prng = Prng(seed)
    scale = 1.0 / np.sqrt(dim)
    mats = []
    for beta in moduli:
        p = prng.normal_matrix(dim, dim) * scale
        k = prng.normal_matrix(dim, dim) * scale
        mats.append(p.T @ p + 0.5 * (k - k.T) + beta * np.eye(dim))
    solution = prng.normals(dim)
    offsets = [prng.normals(dim) for _ in range(n_ops - 1)]
    total = sum(m @ solution for m in mats)
    for c in offsets:
        total = total + c
    offsets.append(-total)
    return AffineMonotoneInstance(
        dim=dim,
        mats=tuple(mats),
        offsets=tuple(offsets),
        moduli=tuple(float(b) for b in moduli),
        solution=solution,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# plain-text serialisation for cross-implementation regression


def _write_block(fh, arr):
    arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
    for row in arr:
        fh.write(" ".join(format_float(v) for v in row) + "\n")


def save_instance(inst, path):
    """Write an instance as a header line plus whitespace matrix blocks."""
    with open(path, "w") as fh:
        if isinstance(inst, ConsensusInstance):
            fh.write(f"consensus {inst.n} {inst.seed}\n")
            _write_block(fh, inst.c)
        elif isinstance(inst, RpcaInstance):
            fh.write(
                f"rpca {inst.m} {inst.n} {inst.seed} "
                f"{format_float(inst.sparse_frac)} {format_float(inst.obs_frac)}\n"
            )
            _write_block(fh, inst.low_rank)
            _write_block(fh, inst.sparse)
            _write_block(fh, inst.omega.astype(np.float64))
            _write_block(fh, inst.observed)
        elif isinstance(inst, AffineMonotoneInstance):
            fh.write(f"affine {len(inst.mats)} {inst.dim} {inst.seed}\n")
            _write_block(fh, np.asarray(inst.moduli))
            _write_block(fh, inst.solution)
            for m, c in zip(inst.mats, inst.offsets):
                _write_block(fh, m)
                _write_block(fh, c)
        else:
            raise ParameterError(f"cannot serialise {type(inst).__name__}")


def _read_rows(lines, cursor, rows):
    data = [np.array([float(v) for v in lines[cursor + r].split()]) for r in range(rows)]
    return np.vstack(data), cursor + rows


def load_instance(path):
    """Read back an instance written by :func:`save_instance`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    kind = head[0]
    if kind == "consensus":
        n, seed = int(head[1]), int(head[2])
        c, _ = _read_rows(lines, 1, 1)
        return ConsensusInstance(n=n, c=c[0], seed=seed)
    if kind == "rpca":
        m, n, seed = int(head[1]), int(head[2]), int(head[3])
        sparse_frac, obs_frac = float(head[4]), float(head[5])
        cursor = 1
        low_rank, cursor = _read_rows(lines, cursor, m)
        sparse, cursor = _read_rows(lines, cursor, m)
        omega, cursor = _read_rows(lines, cursor, m)
        observed, cursor = _read_rows(lines, cursor, m)
        return RpcaInstance(
            m=m,
            n=n,
            low_rank=low_rank,
            sparse=sparse,
            omega=omega.astype(bool),
            observed=observed,
            seed=seed,
            sparse_frac=sparse_frac,
            obs_frac=obs_frac,
        )
    if kind == "affine":
        n_ops, dim, seed = int(head[1]), int(head[2]), int(head[3])
        cursor = 1
        moduli, cursor = _read_rows(lines, cursor, 1)
        solution, cursor = _read_rows(lines, cursor, 1)
        mats, offsets = [], []
        for _ in range(n_ops):
            m, cursor = _read_rows(lines, cursor, dim)
            c, cursor = _read_rows(lines, cursor, 1)
            mats.append(m)
            offsets.append(c[0])
        return AffineMonotoneInstance(
            dim=dim,
            mats=tuple(mats),
            offsets=tuple(offsets),
            moduli=tuple(moduli[0]),
            solution=solution[0],
            seed=seed,
        )
    raise ParameterError(f"unknown instance kind {kind!r}")
