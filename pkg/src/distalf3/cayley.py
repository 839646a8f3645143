"""Breadth-first enumeration of subgroups of SL2(Z/p) generated by projected
integer matrices, and the Cayley graph they define."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .sl2 import IntMat2, ModMat2, Prime, as_prime, canonical_generators, reduce_mod
from .spectra import WalkOperator

__all__ = [
    "CapacityError",
    "GroupTable",
    "GenerationReport",
    "enumerate_group",
    "generation_check",
    "walk_operator",
    "named_generators",
    "sl2_order",
    "DEFAULT_CAPACITY",
]

DEFAULT_CAPACITY = 20_000_000
# rank -> index lookups use a flat int32 array up to this group order
_DENSE_LOOKUP_LIMIT = 1 << 25
# rank() needs p**3 < 2**63
_MAX_ENUM_PRIME = 1 << 21


class CapacityError(RuntimeError):
    pass


def sl2_order(p: int) -> int:
    return p * (p * p - 1)


def named_generators(name: str, c: IntMat2 | None = None) -> list[IntMat2]:
    """``"ab"`` -> [a, b], ``"abc"`` -> [a, b, c], etc.; ``c`` replaces the default c."""
    gens = canonical_generators()
    if c is not None:
        gens["c"] = c
    try:
        return [gens[ch] for ch in name]
    except KeyError as exc:
        raise ValueError(f"unknown generator {exc.args[0]!r} in {name!r}") from None


def _mat_mul(m: np.ndarray, g, p: int) -> np.ndarray:
    """Row-wise product of (n, 4) matrices with one fixed matrix g, mod p."""
    e, f, gg, h = g
    out = np.empty_like(m)
    out[:, 0] = (m[:, 0] * e + m[:, 1] * gg) % p
    out[:, 1] = (m[:, 0] * f + m[:, 1] * h) % p
    out[:, 2] = (m[:, 2] * e + m[:, 3] * gg) % p
    out[:, 3] = (m[:, 2] * f + m[:, 3] * h) % p
    return out


def _left_mul(g, m: np.ndarray, p: int) -> np.ndarray:
    a, b, c, d = g
    out = np.empty_like(m)
    out[:, 0] = (a * m[:, 0] + b * m[:, 2]) % p
    out[:, 1] = (a * m[:, 1] + b * m[:, 3]) % p
    out[:, 2] = (c * m[:, 0] + d * m[:, 2]) % p
    out[:, 3] = (c * m[:, 1] + d * m[:, 3]) % p
    return out


def _pair_mul(x: np.ndarray, y: np.ndarray, p: int) -> np.ndarray:
    out = np.empty_like(x)
    out[:, 0] = (x[:, 0] * y[:, 0] + x[:, 1] * y[:, 2]) % p
    out[:, 1] = (x[:, 0] * y[:, 1] + x[:, 1] * y[:, 3]) % p
    out[:, 2] = (x[:, 2] * y[:, 0] + x[:, 3] * y[:, 2]) % p
    out[:, 3] = (x[:, 2] * y[:, 1] + x[:, 3] * y[:, 3]) % p
    return out


def _rank(m: np.ndarray, p: int) -> np.ndarray:
    """Bijection SL2(Z/p) -> [0, p(p^2-1)).

    The first row (a, b) is nonzero and picks a line of p completions; the
    free coordinate is c when a != 0 (d is then forced) and d otherwise.
    """
    a, b = m[:, 0], m[:, 1]
    t = np.where(a != 0, m[:, 2], m[:, 3])
    return (a * p + b - 1) * p + t


class _Index:
    """rank -> element index, dense array or sorted keys depending on p."""

    def __init__(self, p: int):
        self.order = sl2_order(p)
        self.dense = self.order <= _DENSE_LOOKUP_LIMIT
        if self.dense:
            self._arr = np.full(self.order, -1, dtype=np.int32)
        else:
            self._keys = np.empty(0, dtype=np.int64)
            self._vals = np.empty(0, dtype=np.int64)

    def lookup(self, ranks: np.ndarray) -> np.ndarray:
        if self.dense:
            return self._arr[ranks].astype(np.int64)
        if self._keys.size == 0:
            return np.full(ranks.shape, -1, dtype=np.int64)
        pos = np.searchsorted(self._keys, ranks)
        pos = np.minimum(pos, self._keys.size - 1)
        found = self._keys[pos] == ranks
        return np.where(found, self._vals[pos], -1)

    def add(self, ranks: np.ndarray, start: int):
        idx = np.arange(start, start + ranks.size, dtype=np.int64)
        if self.dense:
            self._arr[ranks] = idx
        else:
            keys = np.concatenate([self._keys, ranks])
            vals = np.concatenate([self._vals, idx])
            order = np.argsort(keys, kind="stable")
            self._keys, self._vals = keys[order], vals[order]


@dataclass(frozen=True, eq=False)
class GroupTable:
    """A finite subgroup of SL2(Z/p) listed in BFS order (identity first).

    ``move_table[k, i]`` is the index of ``elements[i] @ gen_images[k]``, so
    each row is a permutation of the elements.
    """

    prime: Prime
    elements: np.ndarray
    gen_images: tuple[ModMat2, ...]
    move_table: np.ndarray
    _index: _Index

    @property
    def size(self) -> int:
        return self.elements.shape[0]

    @property
    def degree(self) -> int:
        return len(self.gen_images)

    @property
    def p(self) -> int:
        return self.prime.value

    def element(self, i: int) -> ModMat2:
        return ModMat2(*(int(v) for v in self.elements[i]), self.p)

    def index_of(self, mats) -> np.ndarray:
        """Indices of the given (n, 4) residue rows; -1 for non-members."""
        m = np.atleast_2d(np.asarray(mats, dtype=np.int64)) % self.p
        ok = (m[:, 0] * m[:, 3] - m[:, 1] * m[:, 2]) % self.p == 1
        out = np.full(m.shape[0], -1, dtype=np.int64)
        out[ok] = self._index.lookup(_rank(m[ok], self.p))
        return out

    def index_of_matrix(self, m) -> int:
        entries = m.entries if hasattr(m, "entries") else m
        i = int(self.index_of([list(entries)[:4]])[0])
        if i < 0:
            raise KeyError(f"{entries} is not in the subgroup")
        return i

    def mul(self, i, j) -> np.ndarray:
        """Index of elements[i] @ elements[j], vectorized."""
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        i, j = np.broadcast_arrays(i, j)
        prod = _pair_mul(self.elements[i.ravel()], self.elements[j.ravel()], self.p)
        return self._index.lookup(_rank(prod, self.p)).reshape(i.shape)

    def inverse(self, i) -> np.ndarray:
        e = self.elements[np.asarray(i, dtype=np.int64).ravel()]
        inv = np.stack([e[:, 3], -e[:, 1] % self.p, -e[:, 2] % self.p, e[:, 0]], axis=1)
        return self._index.lookup(_rank(inv, self.p)).reshape(np.shape(i))

    def left_translation(self, g) -> np.ndarray:
        """Permutation x -> g x for a member g (ModMat2, IntMat2 or entries)."""
        entries = [int(v) % self.p for v in (g.entries if hasattr(g, "entries") else g)][:4]
        out = self._index.lookup(_rank(_left_mul(entries, self.elements, self.p), self.p))
        if (out < 0).any():
            raise KeyError(f"{entries} is not in the subgroup")
        return out

    def right_translation(self, g) -> np.ndarray:
        entries = [int(v) % self.p for v in (g.entries if hasattr(g, "entries") else g)][:4]
        out = self._index.lookup(_rank(_mat_mul(self.elements, entries, self.p), self.p))
        if (out < 0).any():
            raise KeyError(f"{entries} is not in the subgroup")
        return out

    def dump(self, path) -> None:
        """Little-endian binary: b"SL2T", u32 p, u32 size, u32 degree, then
        size x degree u32 rows of the move table."""
        with open(path, "wb") as fh:
            fh.write(b"SL2T")
            fh.write(struct.pack("<III", self.p, self.size, self.degree))
            fh.write(np.ascontiguousarray(self.move_table.T).astype("<u4").tobytes())


def load_move_table(path) -> tuple[int, np.ndarray]:
    """Read a dump written by GroupTable.dump; returns (p, move_table[degree, size])."""
    with open(path, "rb") as fh:
        if fh.read(4) != b"SL2T":
            raise ValueError(f"{path}: bad magic")
        p, size, degree = struct.unpack("<III", fh.read(12))
        rows = np.frombuffer(fh.read(4 * size * degree), dtype="<u4")
    return p, rows.reshape(size, degree).T.astype(np.int64)


def enumerate_group(p, gens: Sequence[IntMat2], capacity: int = DEFAULT_CAPACITY) -> GroupTable:
    """BFS closure of the identity under right multiplication by ``gens`` and their inverses.

    Elements are numbered in discovery order: layer by layer, and within a
    layer by (parent index, generator position), with the symmetric
    generators ordered s0, s0^-1, s1, s1^-1, ...
    """
    prime = as_prime(p)
    q = prime.value
    if q >= _MAX_ENUM_PRIME:
        raise ValueError(f"p = {q} too large to enumerate (need p < {_MAX_ENUM_PRIME})")
    if not gens:
        raise ValueError("need at least one generator")
    sym: list[ModMat2] = []
    for g in gens:
        r = g if isinstance(g, ModMat2) else reduce_mod(g, prime)
        sym.extend([r, r.inverse()])
    gen_entries = [s.entries for s in sym]

    index = _Index(q)
    ident = np.array([[1, 0, 0, 1]], dtype=np.int64)
    index.add(_rank(ident, q), 0)
    layers = [ident]
    frontier = ident
    size = 1
    while frontier.shape[0]:
        cand = np.stack([_mat_mul(frontier, g, q) for g in gen_entries], axis=1).reshape(-1, 4)
        ranks = _rank(cand, q)
        uniq, first = np.unique(ranks, return_index=True)
        fresh = index.lookup(uniq) < 0
        first = np.sort(first[fresh])
        if size + first.size > capacity:
            raise CapacityError(f"subgroup of SL2(Z/{q}) exceeds capacity {capacity}")
        frontier = cand[first]
        index.add(ranks[first], size)
        size += first.size
        layers.append(frontier)
    elements = np.concatenate(layers)
    if sl2_order(q) % size:
        raise AssertionError(f"order {size} does not divide |SL2(Z/{q})|")

    moves = np.empty((len(sym), size), dtype=np.int64)
    for k, g in enumerate(gen_entries):
        moves[k] = index.lookup(_rank(_mat_mul(elements, g, q), q))
    moves = moves.astype(np.int32 if size < 2**31 else np.int64)
    return GroupTable(prime, elements, tuple(sym), moves, index)


@dataclass(frozen=True)
class GenerationReport:
    prime: int
    subgroup_size: int
    full_group_size: int

    @property
    def generated(self) -> bool:
        return self.subgroup_size == self.full_group_size

    def to_json(self) -> dict:
        return {
            "prime": self.prime,
            "subgroup_size": self.subgroup_size,
            "full_group_size": self.full_group_size,
            "generated": self.generated,
        }


def generation_check(p, gens: Sequence[IntMat2], capacity: int = DEFAULT_CAPACITY,
                     table: GroupTable | None = None) -> GenerationReport:
    prime = as_prime(p)
    if table is None:
        table = enumerate_group(prime, gens, capacity)
    return GenerationReport(prime.value, table.size, sl2_order(prime.value))


def walk_operator(table: GroupTable) -> WalkOperator:
    """Normalized adjacency of the Cayley multigraph, (Af)(g) = mean_s f(g s)."""
    return WalkOperator(table.move_table)
