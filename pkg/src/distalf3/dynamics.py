"""Finite truncations of the products K (primes 1 mod 4) and L (primes 3 mod 4),
the cyclic subgroup generated by c, cocycles into L and the skew-product
F3-action with its diagnostics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .cayley import CapacityError, GroupTable, enumerate_group, named_generators, sl2_order
from .sl2 import IntMat2, Prime, as_prime, canonical_generators
from .spectra import RNG_NAME, SpectralReport, WalkOperator, spectral_gap

__all__ = [
    "GenerationError",
    "ResolutionError",
    "TruncatedProduct",
    "CyclicClosure",
    "Cocycle",
    "SkewProductSystem",
    "DefectReport",
    "build_truncation",
    "cyclic_closure",
    "extend_cocycle",
    "apply_move",
    "orbit_transitivity",
    "koopman_gap",
    "equicontinuity_defect",
    "build_system",
    "MOVES",
    "DEFAULT_POINT_CAPACITY",
]

DEFAULT_POINT_CAPACITY = 5_000_000
# move names in move-table order; upper case is the inverse
MOVES = ("a", "A", "b", "B", "c", "C")


class GenerationError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


class TruncatedProduct:
    """Direct product of SL2(Z/p) over a finite list of primes in one class mod 4.

    Elements are flat indices in mixed radix over the per-factor BFS indices,
    first factor most significant, so flat order is lexicographic order of
    index tuples and 0 is the identity.
    """

    def __init__(self, class_mod4: int, primes: Sequence[Prime], tables: Sequence[GroupTable]):
        self.class_mod4 = class_mod4
        self.primes = list(primes)
        self.tables = list(tables)
        self.sizes = [t.size for t in self.tables]
        self.total_size = int(np.prod(self.sizes, dtype=object)) if self.sizes else 1
        strides = []
        acc = 1
        for s in reversed(self.sizes):
            strides.append(acc)
            acc *= s
        self.strides = list(reversed(strides))

    @property
    def nfactors(self) -> int:
        return len(self.tables)

    def decode(self, flat) -> np.ndarray:
        flat = np.asarray(flat, dtype=np.int64)
        out = np.empty(flat.shape + (self.nfactors,), dtype=np.int64)
        for i, (st, sz) in enumerate(zip(self.strides, self.sizes)):
            out[..., i] = (flat // st) % sz
        return out

    def encode(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        flat = np.zeros(coords.shape[:-1], dtype=np.int64)
        for i, st in enumerate(self.strides):
            flat += coords[..., i] * st
        return flat

    def mul(self, x, y) -> np.ndarray:
        cx, cy = self.decode(x), self.decode(y)
        cx, cy = np.broadcast_arrays(cx, cy)
        out = np.empty(cx.shape, dtype=np.int64)
        for i, t in enumerate(self.tables):
            out[..., i] = t.mul(cx[..., i], cy[..., i])
        return self.encode(out)

    def inverse(self, x) -> np.ndarray:
        cx = self.decode(x)
        out = np.empty_like(cx)
        for i, t in enumerate(self.tables):
            out[..., i] = t.inverse(cx[..., i])
        return self.encode(out)

    def project(self, m: IntMat2) -> int:
        """Flat index of the image of an integer matrix."""
        return int(self.encode([t.index_of_matrix(m) for t in self.tables]))

    def left_translation(self, g: int) -> np.ndarray:
        """Permutation x -> g x of all flat indices."""
        return self._translation(g, left=True)

    def right_translation(self, g: int) -> np.ndarray:
        return self._translation(g, left=False)

    def _translation(self, g: int, left: bool) -> np.ndarray:
        gc = self.decode(g)
        out = np.zeros(self.total_size, dtype=np.int64)
        allx = self.decode(np.arange(self.total_size))
        for i, t in enumerate(self.tables):
            e = t.elements[gc[i]]
            perm = t.left_translation(e) if left else t.right_translation(e)
            out += perm[allx[:, i]] * self.strides[i]
        return out

    def describe(self) -> dict:
        return {"class_mod4": self.class_mod4, "primes": [p.value for p in self.primes],
                "factor_sizes": self.sizes, "total_size": self.total_size}


def build_truncation(class_mod4: int, primes: Sequence, gens=None) -> TruncatedProduct:
    """Product of SL2(Z/p) over ``primes``, each factor checked to be generated
    by ``gens`` (default "abc" for class 1 and "ab" for class 3)."""
    if class_mod4 not in (1, 3):
        raise ValueError("class_mod4 must be 1 or 3")
    if gens is None:
        gens = "abc" if class_mod4 == 1 else "ab"
    mats = named_generators(gens) if isinstance(gens, str) else list(gens)
    ps = [as_prime(p) for p in primes]
    if len({p.value for p in ps}) != len(ps):
        raise ValueError("primes must be distinct")
    tables = []
    for p in ps:
        if p.residue_class_mod4 != class_mod4:
            raise ValueError(f"{p.value} is not {class_mod4} mod 4")
        t = enumerate_group(p, mats)
        if t.size != sl2_order(p.value):
            raise GenerationError(f"generators do not generate SL2(Z/{p.value}) "
                                  f"(subgroup of order {t.size})")
        tables.append(t)
    return TruncatedProduct(class_mod4, ps, tables)


@dataclass(eq=False)
class CyclicClosure:
    """The cyclic subgroup <c> of a truncation and the section of its left cosets.

    Each coset x<c> is represented by its minimal flat index k, and every x
    factors uniquely as x = k c^s with 0 <= s < order.
    """

    parent: TruncatedProduct
    generator: int
    elements: np.ndarray
    coset_rep: np.ndarray
    power: np.ndarray

    @property
    def order(self) -> int:
        return self.elements.size

    @property
    def coset_reps(self) -> np.ndarray:
        return np.unique(self.coset_rep)

    @property
    def ncosets(self) -> int:
        return self.parent.total_size // self.order

    def factor(self, x):
        return self.coset_rep[x], self.power[x]


def cyclic_closure(base: TruncatedProduct, c: int) -> CyclicClosure:
    powers = [0]
    cur = int(c)
    while cur != 0:
        powers.append(cur)
        cur = int(base.mul(cur, c))
    elements = np.array(powers, dtype=np.int64)
    m = elements.size
    right = base.right_translation(int(c))
    n = base.total_size
    rep = np.arange(n, dtype=np.int64)
    cur = rep.copy()
    for _ in range(m - 1):
        cur = right[cur]
        np.minimum(rep, cur, out=rep)
    power = np.full(n, -1, dtype=np.int64)
    walk = np.unique(rep)
    for s in range(m):
        power[walk] = s
        walk = right[walk]
    return CyclicClosure(base, int(c), elements, rep, power)


@dataclass(eq=False)
class Cocycle:
    """A map from <c> into the fiber, stored by power: values[s] = phi0(c^s)."""

    kind: str
    values: np.ndarray
    seed: Optional[int] = None

    @classmethod
    def trivial(cls, closure: CyclicClosure, fiber: TruncatedProduct) -> "Cocycle":
        return cls("trivial", np.zeros(closure.order, dtype=np.int64))

    @classmethod
    def seeded_random(cls, closure: CyclicClosure, fiber: TruncatedProduct, seed: int) -> "Cocycle":
        vals = _rng(seed).integers(0, fiber.total_size, closure.order, dtype=np.int64)
        return cls("seeded-random", vals, seed)

    @classmethod
    def table(cls, values, closure: CyclicClosure, fiber: TruncatedProduct) -> "Cocycle":
        vals = np.asarray(values, dtype=np.int64)
        if vals.shape != (closure.order,):
            raise ValueError(f"need {closure.order} values, got shape {vals.shape}")
        if (vals < 0).any() or (vals >= fiber.total_size).any():
            raise ValueError("cocycle values must be fiber element indices")
        return cls("table", vals)

    def __call__(self, power) -> np.ndarray:
        return self.values[power]

    def describe(self) -> str:
        return self.kind if self.seed is None else f"{self.kind}:{self.seed}"


def extend_cocycle(closure: CyclicClosure, phi0: Cocycle, x) -> np.ndarray:
    """phi(x) = phi0(k^-1 x) where k is the section's representative of x<c>."""
    base = closure.parent
    x = np.asarray(x, dtype=np.int64)
    inner = base.mul(base.inverse(closure.coset_rep[x]), x)
    # inner lies in <c>, whose coset representative is the identity
    return phi0(closure.power[inner])


class SkewProductSystem:
    """The six moves T_a, T_b, T_c and inverses on base x fiber.

    Points are flat indices x * |fiber| + y.
    """

    def __init__(self, base: TruncatedProduct, fiber: TruncatedProduct, cocycle_spec="trivial",
                 fiber_images: Optional[Sequence[IntMat2]] = None, c: Optional[IntMat2] = None,
                 capacity: int = DEFAULT_POINT_CAPACITY):
        self.base, self.fiber = base, fiber
        self.size = base.total_size * fiber.total_size
        self.capacity = capacity
        gens = canonical_generators()
        self.a_K = base.project(gens["a"])
        self.b_K = base.project(gens["b"])
        self.c_K = base.project(c if c is not None else gens["c"])
        fa, fb = fiber_images if fiber_images is not None else (gens["a"], gens["b"])
        self.f = fiber.project(fa)
        self.g = fiber.project(fb)
        self.closure = cyclic_closure(base, self.c_K)
        self.cocycle = self._make_cocycle(cocycle_spec)

        self._left = {}
        for name, el in (("a", self.a_K), ("b", self.b_K), ("c", self.c_K)):
            perm = base.left_translation(el)
            inv = np.empty_like(perm)
            inv[perm] = np.arange(perm.size)
            self._left[name], self._left[name.upper()] = perm, inv
        self._fiber_left = {}
        for name, el in (("a", self.f), ("b", self.g)):
            perm = fiber.left_translation(el)
            inv = np.empty_like(perm)
            inv[perm] = np.arange(perm.size)
            self._fiber_left[name], self._fiber_left[name.upper()] = perm, inv
        self.phi = extend_cocycle(self.closure, self.cocycle, np.arange(base.total_size))
        self.phi_inv = fiber.inverse(self.phi)
        self._moves: Optional[np.ndarray] = None

    def _make_cocycle(self, spec) -> Cocycle:
        if isinstance(spec, Cocycle):
            return spec
        if spec == "trivial":
            return Cocycle.trivial(self.closure, self.fiber)
        if isinstance(spec, str) and spec.startswith("random:"):
            return Cocycle.seeded_random(self.closure, self.fiber, int(spec.split(":", 1)[1]))
        if not isinstance(spec, str):
            return Cocycle.table(spec, self.closure, self.fiber)
        raise ValueError(f"unknown cocycle {spec!r}")

    def point(self, x, y) -> np.ndarray:
        return np.asarray(x, dtype=np.int64) * self.fiber.total_size + np.asarray(y, dtype=np.int64)

    def split(self, pt):
        return np.divmod(np.asarray(pt, dtype=np.int64), self.fiber.total_size)

    def move(self, name: str, x, y):
        """Apply one move to base/fiber index arrays; returns (x', y')."""
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if name in ("a", "A", "b", "B"):
            return self._left[name][x], self._fiber_left[name][y]
        if name == "c":
            return self._left["c"][x], self.fiber.mul(self.phi[x], y)
        if name == "C":
            xp = self._left["C"][x]
            return xp, self.fiber.mul(self.phi_inv[xp], y)
        raise ValueError(f"unknown move {name!r}")

    def move_table(self) -> np.ndarray:
        if self._moves is None:
            if self.size > self.capacity:
                raise CapacityError(f"product space has {self.size} points (capacity {self.capacity})")
            x, y = self.split(np.arange(self.size))
            rows = [self.point(*self.move(name, x, y)) for name in MOVES]
            self._moves = np.stack(rows)
        return self._moves

    def operator(self) -> WalkOperator:
        return WalkOperator(self.move_table(), check=False)

    def describe(self) -> dict:
        return {
            "base": self.base.describe(),
            "fiber": self.fiber.describe(),
            "points": self.size,
            "cocycle": self.cocycle.describe(),
            "c_order": self.closure.order,
            "cosets": self.closure.ncosets,
        }


def build_system(kprimes: Sequence, lprimes: Sequence, cocycle="trivial",
                 c: Optional[IntMat2] = None, **kw) -> SkewProductSystem:
    """K-truncation generated by a, b, c and L-truncation generated by a, b."""
    kgens = named_generators("abc", c=c)
    return SkewProductSystem(build_truncation(1, kprimes, kgens), build_truncation(3, lprimes),
                             cocycle, c=c, **kw)


_SIGN = {("a", 1): "a", ("a", -1): "A", ("b", 1): "b", ("b", -1): "B", ("c", 1): "c", ("c", -1): "C"}


def apply_move(sys: SkewProductSystem, move: str, sign: int, point):
    """T_move^sign applied to a point (x, y) of base and fiber indices."""
    x, y = point
    return sys.move(_SIGN[(move, sign)], x, y)


def orbit_transitivity(sys: SkewProductSystem) -> tuple[bool, int]:
    """Whether the moves act transitively, and the number of orbits."""
    moves = sys.move_table()
    seen = np.zeros(sys.size, dtype=bool)
    seen[0] = True
    frontier = np.array([0])
    while frontier.size:
        nxt = np.unique(moves[:, frontier].ravel())
        nxt = nxt[~seen[nxt]]
        seen[nxt] = True
        frontier = nxt
    if seen.all():
        return True, 1
    count, _ = sys.operator().components()
    return False, count


def koopman_gap(sys: SkewProductSystem, method: str = "auto", tol: float = 1e-8,
                seed: int = 0, dense_threshold: int = 2000) -> SpectralReport:
    return spectral_gap(sys.operator(), method=method, tol=tol, seed=seed,
                        dense_threshold=dense_threshold)


@dataclass
class DefectReport:
    defect: float
    delta: float
    horizon: int
    samples: int
    seed: int
    min_positive_distance: float
    attaining_pair: tuple
    attaining_step: int
    initial_distance: float

    def to_json(self) -> dict:
        return {
            "defect": self.defect,
            "delta": self.delta,
            "horizon": self.horizon,
            "samples": self.samples,
            "seed": self.seed,
            "rng": RNG_NAME,
            "min_positive_distance": self.min_positive_distance,
            "attaining_pair": [list(pt) for pt in self.attaining_pair],
            "attaining_step": self.attaining_step,
            "initial_distance": self.initial_distance,
        }


def factor_weights(sys: SkewProductSystem) -> np.ndarray:
    """2^-i over base factors then fiber factors."""
    nf = sys.base.nfactors + sys.fiber.nfactors
    return 2.0 ** -np.arange(nf)


def distance(sys: SkewProductSystem, p, q) -> np.ndarray:
    """Weighted count of factors in which two points (x, y) differ."""
    w = factor_weights(sys)
    nb = sys.base.nfactors
    (x1, y1), (x2, y2) = p, q
    db = (sys.base.decode(x1) != sys.base.decode(x2)) @ w[:nb] if nb else 0.0
    df = (sys.fiber.decode(y1) != sys.fiber.decode(y2)) @ w[nb:] if sys.fiber.nfactors else 0.0
    return np.asarray(db + df, dtype=np.float64)


def equicontinuity_defect(sys: SkewProductSystem, delta: float, horizon: int, samples: int,
                          seed: int = 0) -> DefectReport:
    """Largest distance reached within ``horizon`` steps of T_c by sampled pairs
    of points of <c> x fiber that start at distance in (0, delta].

    The metric is sum_i 2^-i [coordinate i differs], base factors first.  A
    pair is drawn by picking a random first point, then a partner base point
    uniformly among those admitting some partner within delta, then the
    partner fiber point uniformly.
    """
    w = factor_weights(sys)
    nb = sys.base.nfactors
    closure = sys.closure
    bc = sys.base.decode(closure.elements)
    base_dist = (bc[:, None, :] != bc[None, :, :]) @ w[:nb] if nb else np.zeros((closure.order,) * 2)
    fc = sys.fiber.decode(np.arange(sys.fiber.total_size))
    fw = w[nb:]

    positive = [base_dist[0, s] for s in range(1, closure.order)]
    positive += [fw[j] for j, sz in enumerate(sys.fiber.sizes) if sz > 1]
    if not positive:
        raise ResolutionError("the space <c> x fiber has a single point")
    min_pos = float(min(positive))
    if delta < min_pos:
        raise ResolutionError(f"delta = {delta} is below the minimal positive distance {min_pos}")

    rng = _rng(seed)
    px, py, qx, qy = (np.empty(samples, dtype=np.int64) for _ in range(4))
    for i in range(samples):
        s0 = int(rng.integers(closure.order))
        y0 = int(rng.integers(sys.fiber.total_size))
        fd = (fc != fc[y0]) @ fw if fw.size else np.zeros(1)
        # base partner first, then a fiber partner keeping the pair within delta
        ok = (base_dist[s0][:, None] + fd[None, :] > 0) & (base_dist[s0][:, None] + fd[None, :] <= delta + 1e-12)
        bases = np.flatnonzero(ok.any(axis=1))
        s1 = int(bases[rng.integers(bases.size)])
        ys = np.flatnonzero(ok[s1])
        y1 = int(ys[rng.integers(ys.size)])
        px[i], py[i] = closure.elements[s0], y0
        qx[i], qy[i] = closure.elements[s1], y1

    start = distance(sys, (px, py), (qx, qy))
    best = start.copy()
    best_step = np.zeros(samples, dtype=np.int64)
    x1, y1, x2, y2 = px, py, qx, qy
    for n in range(1, horizon + 1):
        x1, y1 = sys.move("c", x1, y1)
        x2, y2 = sys.move("c", x2, y2)
        d = distance(sys, (x1, y1), (x2, y2))
        better = d > best
        best[better] = d[better]
        best_step[better] = n
    i = int(np.argmax(best))
    pair = ((int(px[i]), int(py[i])), (int(qx[i]), int(qy[i])))
    return DefectReport(float(best[i]), float(delta), horizon, samples, seed, min_pos,
                        pair, int(best_step[i]), float(start[i]))
