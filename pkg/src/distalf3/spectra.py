"""Spectral gaps of averaged permutation (walk) operators.

A walk operator is stored as ``d`` permutations of ``range(n)``; applying it
to ``f`` averages ``f`` over the ``d`` moves.  Two eigensolvers are provided:
a dense one for small ``n`` (used as the oracle) and a thick-restart Lanczos
iteration on the mean-zero subspace that never materializes the matrix.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "WalkOperator",
    "SpectralReport",
    "SweepResult",
    "ScanRow",
    "ConvergenceError",
    "dense_spectrum",
    "iterative_gap",
    "spectral_gap",
    "cheeger_sweep",
    "gap_scan",
    "cycle_operator",
    "complete_operator",
    "disjoint_union",
    "SCAN_HEADER",
    "RNG_NAME",
    "GAP_ZERO_TOL",
]

DENSE_CAP = 5000
RNG_NAME = "numpy.random.PCG64"
# gaps at or below this are reported as zero (an invariant vector exists)
GAP_ZERO_TOL = 1e-8
SCAN_HEADER = ("p", "class_mod4", "group_size", "generated", "lambda2", "gap", "method", "flag")


class ConvergenceError(RuntimeError):
    pass


class WalkOperator:
    """(Af)(i) = (1/d) * sum_k f(moves[k, i]) for a (d, n) array of permutations."""

    def __init__(self, moves: np.ndarray, check: bool = True):
        moves = np.asarray(moves)
        if moves.ndim != 2 or moves.shape[0] < 1:
            raise ValueError("moves must have shape (d, n) with d >= 1")
        self.moves = moves
        self.degree, self.size = moves.shape
        if check:
            for k, row in enumerate(moves):
                if not np.array_equal(np.sort(row), np.arange(self.size)):
                    raise ValueError(f"move {k} is not a permutation")
        self._self_adjoint: Optional[bool] = None

    @property
    def self_adjoint(self) -> bool:
        """True when the move multiset is closed under inversion."""
        if self._self_adjoint is None:
            have = Counter(row.astype(np.int64).tobytes() for row in self.moves)
            inv = Counter()
            for row in self.moves:
                r = np.empty(self.size, dtype=np.int64)
                r[row] = np.arange(self.size)
                inv[r.tobytes()] += 1
            self._self_adjoint = have == inv
        return self._self_adjoint

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=np.float64)
        out = f[self.moves[0]].copy()
        for row in self.moves[1:]:
            out += f[row]
        out /= self.degree
        return out

    __call__ = apply

    def to_dense(self) -> np.ndarray:
        n = self.size
        a = np.zeros((n, n))
        rows = np.arange(n)
        for row in self.moves:
            np.add.at(a, (rows, row), 1.0)
        return a / self.degree

    def components(self) -> tuple[int, np.ndarray]:
        """Orbits of the group generated by the moves, by frontier BFS."""
        n = self.size
        label = np.full(n, -1, dtype=np.int64)
        count = 0
        for start in range(n):
            if label[start] >= 0:
                continue
            label[start] = count
            frontier = np.array([start])
            while frontier.size:
                nxt = np.unique(self.moves[:, frontier].ravel())
                nxt = nxt[label[nxt] < 0]
                label[nxt] = count
                frontier = nxt
            count += 1
        return count, label


def cycle_operator(n: int) -> WalkOperator:
    i = np.arange(n)
    return WalkOperator(np.stack([(i + 1) % n, (i - 1) % n]))


def complete_operator(n: int) -> WalkOperator:
    """K_n as the n-1 nontrivial rotations of Z/n."""
    i = np.arange(n)
    return WalkOperator(np.stack([(i + k) % n for k in range(1, n)]))


def disjoint_union(*ops: WalkOperator) -> WalkOperator:
    d = ops[0].degree
    if any(op.degree != d for op in ops):
        raise ValueError("degrees differ")
    parts, off = [], 0
    for op in ops:
        parts.append(op.moves.astype(np.int64) + off)
        off += op.size
    return WalkOperator(np.concatenate(parts, axis=1))


@dataclass
class SpectralReport:
    lambda2: float
    gap: float
    lambda_min: float
    method: str
    iterations: int = 0
    residual_norm: float = 0.0
    seed: Optional[int] = None
    size: int = 0
    degree: int = 0
    converged: bool = True
    degenerate: bool = False
    vector: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    @property
    def has_gap(self) -> bool:
        return self.gap > GAP_ZERO_TOL

    def to_json(self) -> dict:
        return {
            "lambda2": None if math.isnan(self.lambda2) else self.lambda2,
            "gap": self.gap,
            "lambda_min": self.lambda_min,
            "method": self.method,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "seed": self.seed,
            "size": self.size,
            "degree": self.degree,
            "converged": self.converged,
            "degenerate": self.degenerate,
            "rng": RNG_NAME,
        }


def _degenerate(op: WalkOperator, method: str, seed=None) -> SpectralReport:
    return SpectralReport(float("nan"), 0.0, 1.0, method, seed=seed, size=op.size,
                          degree=op.degree, degenerate=True)


def dense_spectrum(op: WalkOperator, cap: int = DENSE_CAP) -> SpectralReport:
    """Full eigendecomposition of the materialized operator.

    The returned vector is a unit eigenvector for lambda2 orthogonal to the
    constants, also when lambda2 = 1 is degenerate.
    """
    n = op.size
    if n > cap:
        raise ValueError(f"n = {n} exceeds the dense cap {cap}")
    if n == 1:
        return _degenerate(op, "dense")
    a = op.to_dense()
    if op.self_adjoint:
        vals, vecs = np.linalg.eigh(a)
    else:
        a = (a + a.T) / 2
        vals, vecs = np.linalg.eigh(a)
    lam2 = float(min(vals[-2], 1.0))
    # eigenvectors in the top cluster; pick the one least aligned with constants
    cluster = vecs[:, vals >= lam2 - 1e-10]
    cluster = cluster - cluster.mean(axis=0)
    norms = np.linalg.norm(cluster, axis=0)
    v = cluster[:, int(np.argmax(norms))]
    v = v / np.linalg.norm(v)
    res = float(np.linalg.norm(op.apply(v) - lam2 * v))
    return SpectralReport(lam2, 1.0 - lam2, float(vals[0]), "dense", residual_norm=res,
                          size=n, degree=op.degree, vector=v)


def iterative_gap(op: WalkOperator, tol: float = 1e-8, max_iter: int = 20000,
                  seed: int = 0, ncv: int = 24) -> SpectralReport:
    """Largest eigenvalue of A on mean-zero functions by thick-restart Lanczos.

    Every new Krylov vector is projected to mean zero and fully
    reorthogonalized (twice) against the current basis.  On restart the
    ``ncv // 2`` largest Ritz vectors are kept together with the residual
    direction.  ``residual_norm`` is the explicitly recomputed
    ||A v - lambda2 v|| of the returned unit vector; ``lambda_min`` is the
    smallest Ritz value of the final basis (an estimate, not converged).
    Raises ConvergenceError only if ``max_iter`` is hit; the partial report
    is attached as ``exc.report``.
    """
    n = op.size
    if n == 1:
        return _degenerate(op, "iterative", seed)
    if not op.self_adjoint:
        raise ValueError("iterative_gap needs a self-adjoint operator")
    rng = np.random.Generator(np.random.PCG64(seed))
    v = rng.standard_normal(n)
    v -= v.mean()
    v /= np.linalg.norm(v)

    m = max(2, min(ncv, n - 1))
    V = np.empty((m + 1, n))
    H = np.zeros((m + 1, m))
    V[0] = v
    k = 0
    matvecs = 0
    while True:
        m_eff = m
        breakdown = False
        for j in range(k, m):
            w = op.apply(V[j])
            matvecs += 1
            w -= w.mean()
            basis = V[: j + 1]
            h = basis @ w
            w -= h @ basis
            h2 = basis @ w
            w -= h2 @ basis
            H[: j + 1, j] = h + h2
            beta = float(np.linalg.norm(w))
            H[j + 1, j] = beta
            if beta <= 1e-13:
                m_eff = j + 1
                breakdown = True
                break
            V[j + 1] = w / beta
        T = H[:m_eff, :m_eff]
        T = (T + T.T) / 2
        theta, S = np.linalg.eigh(T)
        beta_m = 0.0 if breakdown else H[m_eff, m_eff - 1]
        est = abs(beta_m * S[-1, -1])
        if est <= tol or breakdown or matvecs >= max_iter:
            break
        keep = max(1, m_eff // 2)
        sel = slice(m_eff - keep, m_eff)
        kept = S[:, sel].T @ V[:m_eff]
        resid = V[m_eff].copy()
        V[:keep] = kept
        V[keep] = resid
        H[:] = 0.0
        H[:keep, :keep] = np.diag(theta[sel])
        H[keep, :keep] = beta_m * S[-1, sel]
        k = keep

    x = S[:, -1] @ V[:m_eff]
    x -= x.mean()
    x /= np.linalg.norm(x)
    ax = op.apply(x)
    matvecs += 1
    lam2 = float(min(x @ ax, 1.0))
    res = float(np.linalg.norm(ax - lam2 * x))
    report = SpectralReport(lam2, 1.0 - lam2, float(theta[0]), "iterative", iterations=matvecs,
                            residual_norm=res, seed=seed, size=n, degree=op.degree,
                            converged=res <= tol, vector=x)
    if not report.converged and matvecs >= max_iter:
        err = ConvergenceError(f"Lanczos residual {res:.3e} > {tol:.1e} after {matvecs} applications")
        err.report = report
        raise err
    return report


def spectral_gap(op: WalkOperator, method: str = "auto", tol: float = 1e-8, seed: int = 0,
                 dense_threshold: int = 2000, max_iter: int = 20000) -> SpectralReport:
    if method == "auto":
        method = "dense" if op.size <= dense_threshold else "iterative"
    if method == "dense":
        return dense_spectrum(op)
    if method == "iterative":
        return iterative_gap(op, tol=tol, seed=seed, max_iter=max_iter)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SweepResult:
    best_set_size: int
    boundary_ratio: float


def cheeger_sweep(op: WalkOperator, vector: np.ndarray) -> SweepResult:
    """Best prefix set of the vertices sorted by ``vector`` (ties by index).

    The ratio of a set A is |dA| / (d * min(|A|, |A^c|)) where |dA| counts
    pairs (i, k) with i in A and moves[k, i] outside A.
    """
    n = op.size
    if n < 2:
        return SweepResult(0, float("nan"))
    vector = np.asarray(vector, dtype=np.float64)
    order = np.lexsort((np.arange(n), vector))
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    diff = np.zeros(n + 1, dtype=np.int64)
    for row in op.moves:
        pu = pos
        pw = pos[row]
        out = pu < pw
        # edge u -> w leaves the prefix of size s exactly when pu < s <= pw
        diff += np.bincount(pu[out] + 1, minlength=n + 1)
        diff -= np.bincount(pw[out] + 1, minlength=n + 1)
    cut = np.cumsum(diff)[1:n]
    s = np.arange(1, n)
    ratio = cut / (op.degree * np.minimum(s, n - s))
    best = int(np.argmin(ratio))
    return SweepResult(int(s[best]), float(ratio[best]))


# ---------------------------------------------------------------- prime scans

@dataclass
class ScanRow:
    p: int
    class_mod4: int
    group_size: int
    generated: bool
    lambda2: Optional[float] = None
    gap: Optional[float] = None
    method: str = ""
    flag: str = ""
    sweep_ratio: Optional[float] = None
    sweep_set_size: Optional[int] = None
    residual_norm: Optional[float] = None

    def csv_fields(self) -> list[str]:
        def num(x):
            return "" if x is None else repr(float(x))

        return [str(self.p), str(self.class_mod4), str(self.group_size),
                "true" if self.generated else "false", num(self.lambda2), num(self.gap),
                self.method, self.flag]


def _scan_one(p: int, gens, seed: int, tol: float, dense_threshold: int, capacity: int,
              sweep: bool) -> ScanRow:
    from .cayley import CapacityError, enumerate_group, sl2_order, walk_operator

    try:
        table = enumerate_group(p, gens, capacity)
    except CapacityError:
        return ScanRow(p, p % 4, 0, False, flag="capacity")
    row = ScanRow(p, p % 4, table.size, table.size == sl2_order(p))
    if not row.generated:
        row.flag = "not-generated"
        return row
    op = walk_operator(table)
    try:
        rep = spectral_gap(op, tol=tol, seed=seed, dense_threshold=dense_threshold)
    except ConvergenceError as exc:
        rep = exc.report
        row.flag = "not-converged"
    row.lambda2, row.gap, row.method = rep.lambda2, rep.gap, rep.method
    row.residual_norm = rep.residual_norm
    if rep.degenerate:
        row.flag = "degenerate"
    elif sweep and rep.vector is not None:
        sw = cheeger_sweep(op, rep.vector)
        row.sweep_ratio, row.sweep_set_size = sw.boundary_ratio, sw.best_set_size
    return row


def gap_scan(primes: Sequence[int], gens="abc", seed: int = 0, tol: float = 1e-8,
             dense_threshold: int = 2000, capacity: int = 20_000_000, workers: int = 1,
             sweep: bool = True, c=None) -> list[ScanRow]:
    """One row per prime: group size, generation flag, lambda2 and gap.

    ``gens`` is a name such as "ab" / "abc" or a list of IntMat2.  Primes
    whose projected generators do not generate SL2(Z/p) are flagged and
    not solved.
    """
    from .cayley import named_generators
    from .sl2 import as_prime

    mats = named_generators(gens, c=c) if isinstance(gens, str) else list(gens)
    ps = [as_prime(p).value for p in primes]
    args = [(p, mats, seed, tol, dense_threshold, capacity, sweep) for p in ps]
    if workers > 1 and len(ps) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_scan_one, *zip(*args)))
    return [_scan_one(*a) for a in args]


def min_gap(rows: Sequence[ScanRow]) -> Optional[float]:
    gaps = [r.gap for r in rows if r.gap is not None]
    return min(gaps) if gaps else None
