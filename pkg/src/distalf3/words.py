"""Reduced words in free groups, exact evaluation into SL2(Z), and the
finite-length freeness scan."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .sl2 import IDENTITY, IntMat2, inverse, mul

__all__ = [
    "Word",
    "FreenessReport",
    "reduce",
    "evaluate",
    "enumerate_reduced",
    "count_reduced",
    "freeness_scan",
]

Letter = tuple[int, int]

# Letters are coded 2*i for x_i and 2*i+1 for x_i^-1, so code order is
# (generator index, +1 before -1) and code ^ 1 is the inverse letter.


def _code(letter: Letter) -> int:
    i, e = letter
    return 2 * i + (0 if e == 1 else 1)


def _letter(code: int) -> Letter:
    return (code >> 1, 1 if code % 2 == 0 else -1)


@dataclass(frozen=True)
class Word:
    letters: tuple[Letter, ...]
    rank: int

    def __post_init__(self):
        for i, e in self.letters:
            if not 0 <= i < self.rank or e not in (1, -1):
                raise ValueError(f"bad letter {(i, e)} for rank {self.rank}")

    @classmethod
    def from_letters(cls, letters, rank: int) -> "Word":
        return cls(tuple((int(i), int(e)) for i, e in letters), rank)

    @classmethod
    def parse(cls, text: str, rank: int) -> "Word":
        """Parse e.g. ``"a b^-1 c"``; letters are a, b, c, ... in generator order."""
        letters = []
        for tok in text.split():
            name, _, exp = tok.partition("^")
            letters.append((ord(name) - ord("a"), int(exp) if exp else 1))
        return cls.from_letters(letters, rank)

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if other.rank != self.rank:
            raise ValueError("ranks differ")
        return Word(self.letters + other.letters, self.rank)

    def is_reduced(self) -> bool:
        return all(u[0] != v[0] or u[1] != -v[1] for u, v in zip(self.letters, self.letters[1:]))

    def codes(self) -> tuple[int, ...]:
        return tuple(_code(l) for l in self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(chr(ord("a") + i) + ("" if e == 1 else "^-1") for i, e in self.letters)

    def to_json(self) -> list[list[int]]:
        return [[i, e] for i, e in self.letters]


@dataclass
class FreenessReport:
    rank: int
    max_length: int
    words_checked: int
    witness: Optional[Word] = None

    @property
    def free(self) -> bool:
        return self.witness is None

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "max_length": self.max_length,
            "words_checked": self.words_checked,
            "free_to_length": self.free,
            "witness": None if self.witness is None else self.witness.to_json(),
            "witness_text": None if self.witness is None else str(self.witness),
        }


def reduce(w: Word) -> Word:
    stack: list[Letter] = []
    for i, e in w.letters:
        if stack and stack[-1] == (i, -e):
            stack.pop()
        else:
            stack.append((i, e))
    return Word(tuple(stack), w.rank)


def evaluate(w: Word, images: Sequence[IntMat2]) -> IntMat2:
    """Exact product of the images (or their inverses) in letter order."""
    if len(images) != w.rank:
        raise ValueError(f"need {w.rank} images, got {len(images)}")
    inv = [inverse(m) for m in images]
    out = IDENTITY
    for i, e in w.letters:
        out = mul(out, images[i] if e == 1 else inv[i])
    return out


def count_reduced(rank: int, length: int) -> int:
    if length == 0:
        return 1
    return 2 * rank * (2 * rank - 1) ** (length - 1)


def enumerate_reduced(rank: int, length: int) -> Iterator[Word]:
    """Every reduced word of exactly ``length`` letters, in lexicographic code order."""
    if length < 1:
        raise ValueError("length must be >= 1")
    ncodes = 2 * rank

    def rec(prefix: list[int]):
        if len(prefix) == length:
            yield Word(tuple(_letter(c) for c in prefix), rank)
            return
        for c in range(ncodes):
            if prefix and c == prefix[-1] ^ 1:
                continue
            prefix.append(c)
            yield from rec(prefix)
            prefix.pop()

    yield from rec([])


def _decode(rank: int, length: int, index: int) -> Word:
    """Inverse of the lexicographic rank of a reduced word of given length."""
    branch = 2 * rank - 1
    digits = []
    for _ in range(length - 1):
        index, d = divmod(index, branch)
        digits.append(d)
    codes = [index]
    for d in reversed(digits):
        forbidden = codes[-1] ^ 1
        codes.append(d if d < forbidden else d + 1)
    return Word(tuple(_letter(c) for c in codes), rank)


# ---------------------------------------------------------------- scanning

_INT64_SAFE = 2**62
_CHUNK = 1 << 18


def _gen_table(images: Sequence[IntMat2]) -> list[tuple[int, int, int, int]]:
    out = []
    for m in images:
        out.append(m.entries)
        out.append(inverse(m).entries)
    return out


def _children(mats: np.ndarray, last: np.ndarray, gens: np.ndarray):
    """Right-multiply each parent by each allowed letter; children parent-major."""
    branch = gens.shape[0] - 1
    n = mats.shape[0]
    forbidden = last ^ 1
    out = np.empty((n, branch, 4), dtype=mats.dtype)
    codes = np.empty((n, branch), dtype=np.int64)
    m11, m12, m21, m22 = mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3]
    for j in range(branch):
        c = np.where(j < forbidden, j, j + 1)
        g = gens[c]
        out[:, j, 0] = m11 * g[:, 0] + m12 * g[:, 2]
        out[:, j, 1] = m11 * g[:, 1] + m12 * g[:, 3]
        out[:, j, 2] = m21 * g[:, 0] + m22 * g[:, 2]
        out[:, j, 3] = m21 * g[:, 1] + m22 * g[:, 3]
        codes[:, j] = c
    return out.reshape(n * branch, 4), codes.reshape(n * branch)


def iter_evaluated(images: Sequence[IntMat2], max_length: int, first: Optional[int] = None):
    """Yield ``(length, start_index, mats)`` blocks covering every reduced word of
    length 1..max_length; row k of a block is the word with lexicographic index
    ``start_index + k`` among words of that length.

    Entries stay in int64 while a per-block bound guarantees no overflow and
    switch to Python integers (object arrays) beyond it.
    """
    table = _gen_table(images)
    ncodes = len(table)
    branch = ncodes - 1
    gens64 = np.array(table, dtype=np.int64) if max(abs(v) for r in table for v in r) < 2**31 else None
    gens_obj = np.array(table, dtype=object)
    growth = max(max(abs(g[0]) + abs(g[2]), abs(g[1]) + abs(g[3])) for g in table)

    def walk(mats, last, start, length):
        yield length, start, mats
        if length == max_length:
            return
        per = max(1, _CHUNK // max(branch, 1))
        for lo in range(0, mats.shape[0], per):
            sub = mats[lo:lo + per]
            if sub.dtype != object:
                bound = int(np.abs(sub).max()) * growth
                if bound >= _INT64_SAFE or gens64 is None:
                    sub = sub.astype(object)
            gens = gens_obj if sub.dtype == object else gens64
            kids, codes = _children(sub, last[lo:lo + per], gens)
            yield from walk(kids, codes, (start + lo) * branch, length + 1)

    codes = range(ncodes) if first is None else [first]
    for c in codes:
        m = np.array([table[c]], dtype=object)
        if gens64 is not None:
            m = m.astype(np.int64)
        yield from walk(m, np.array([c], dtype=np.int64), c, 1)


def _scan_subtree(images, max_length, first):
    best = None
    checked = 0
    for length, start, mats in iter_evaluated(images, max_length, first):
        checked += mats.shape[0]
        hit = np.flatnonzero((mats[:, 0] == 1) & (mats[:, 1] == 0) & (mats[:, 2] == 0) & (mats[:, 3] == 1))
        if hit.size:
            cand = (length, start + int(hit[0]))
            if best is None or cand < best:
                best = cand
    return checked, best


def freeness_scan(images: Sequence[IntMat2], max_length: int, workers: int = 1) -> FreenessReport:
    """Search every nontrivial reduced word of length <= max_length for one that
    evaluates to the identity.

    The witness, if any, is the shortest such word, ties broken by
    lexicographic order, so a witness found at one length persists at all
    larger ones.
    """
    rank = len(images)
    if rank < 1:
        raise ValueError("need at least one image")
    if max_length < 1:
        raise ValueError("max_length must be >= 1")
    firsts = list(range(2 * rank))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_scan_subtree, [images] * len(firsts), [max_length] * len(firsts), firsts))
    else:
        results = [_scan_subtree(images, max_length, f) for f in firsts]
    checked = sum(r[0] for r in results)
    hits = [r[1] for r in results if r[1] is not None]
    witness = _decode(rank, *min(hits)) if hits else None
    return FreenessReport(rank, max_length, checked, witness)
