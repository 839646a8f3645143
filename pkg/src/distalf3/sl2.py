"""Exact arithmetic in SL2(Z) and SL2(Z/p), plus the fixed generator constants."""

from __future__ import annotations

from dataclasses import dataclass
from math import isqrt

__all__ = [
    "IntMat2",
    "ModMat2",
    "Prime",
    "mul",
    "inverse",
    "reduce_mod",
    "canonical_generators",
    "IDENTITY",
    "is_prime",
]

# residues are multiplied in int64 by the vectorized layers
MAX_PRIME = 2**31


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for f in range(3, isqrt(n) + 1, 2):
        if n % f == 0:
            return False
    return True


@dataclass(frozen=True)
class Prime:
    """An odd prime, checked by trial division."""

    value: int

    def __post_init__(self):
        v = self.value
        if isinstance(v, bool) or not isinstance(v, int):
            raise TypeError(f"prime must be an int, got {v!r}")
        if not is_prime(v):
            raise ValueError(f"{v} is not prime")
        if v == 2:
            raise ValueError("p = 2 is excluded: a and b both reduce to the identity mod 2")
        if v >= MAX_PRIME:
            raise ValueError(f"p = {v} is too large (need p < 2**31)")

    @property
    def residue_class_mod4(self) -> int:
        return self.value % 4

    def __int__(self) -> int:
        return self.value


def as_prime(p) -> Prime:
    return p if isinstance(p, Prime) else Prime(int(p))


@dataclass(frozen=True)
class IntMat2:
    """2x2 integer matrix of determinant 1, stored row-major."""

    a11: int
    a12: int
    a21: int
    a22: int

    def __post_init__(self):
        if self.a11 * self.a22 - self.a12 * self.a21 != 1:
            raise ValueError(f"determinant of {self.rows()} is not 1")

    @classmethod
    def from_rows(cls, rows) -> "IntMat2":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    def rows(self) -> list[list[int]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]

    @property
    def entries(self) -> tuple[int, int, int, int]:
        return (self.a11, self.a12, self.a21, self.a22)

    def __matmul__(self, other: "IntMat2") -> "IntMat2":
        return mul(self, other)

    def inverse(self) -> "IntMat2":
        return inverse(self)

    def __repr__(self):
        return f"IntMat2({self.rows()})"


IDENTITY = IntMat2(1, 0, 0, 1)


def mul(m1: IntMat2, m2: IntMat2) -> IntMat2:
    a, b, c, d = m1.entries
    e, f, g, h = m2.entries
    return IntMat2(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


def inverse(m: IntMat2) -> IntMat2:
    return IntMat2(m.a22, -m.a12, -m.a21, m.a11)


@dataclass(frozen=True)
class ModMat2:
    """2x2 matrix over Z/p with determinant 1 mod p."""

    a11: int
    a12: int
    a21: int
    a22: int
    modulus: int

    def __post_init__(self):
        p = self.modulus
        for v in self.entries:
            if not 0 <= v < p:
                raise ValueError(f"entry {v} not reduced mod {p}")
        if (self.a11 * self.a22 - self.a12 * self.a21) % p != 1:
            raise ValueError(f"determinant is not 1 mod {p}")

    @property
    def entries(self) -> tuple[int, int, int, int]:
        return (self.a11, self.a12, self.a21, self.a22)

    def rows(self) -> list[list[int]]:
        return [[self.a11, self.a12], [self.a21, self.a22]]

    def __matmul__(self, other: "ModMat2") -> "ModMat2":
        if other.modulus != self.modulus:
            raise ValueError("moduli differ")
        p = self.modulus
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return ModMat2((a * e + b * g) % p, (a * f + b * h) % p,
                       (c * e + d * g) % p, (c * f + d * h) % p, p)

    def inverse(self) -> "ModMat2":
        p = self.modulus
        return ModMat2(self.a22, -self.a12 % p, -self.a21 % p, self.a11, p)

    def is_identity(self) -> bool:
        return self.entries == (1, 0, 0, 1)


def reduce_mod(m: IntMat2, p) -> ModMat2:
    """Entrywise reduction of ``m`` into SL2(Z/p)."""
    q = as_prime(p).value
    return ModMat2(m.a11 % q, m.a12 % q, m.a21 % q, m.a22 % q, q)


def canonical_generators() -> dict[str, IntMat2]:
    """x, y, the squares a = x^2, b = y^2, and c = (xy)^2."""
    x = IntMat2(1, 2, 0, 1)
    y = IntMat2(1, 0, 2, 1)
    xy = x @ y
    return {"x": x, "y": y, "a": x @ x, "b": y @ y, "c": xy @ xy}


def parse_matrix(text: str) -> IntMat2:
    """Parse ``"a11,a12,a21,a22"`` into an IntMat2."""
    parts = [int(s) for s in text.replace(" ", "").split(",")]
    if len(parts) != 4:
        raise ValueError(f"expected four comma-separated integers, got {text!r}")
    return IntMat2(*parts)
