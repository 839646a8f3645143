import itertools

import pytest

from distalf3.sl2 import canonical_generators


@pytest.fixture(scope="session")
def gens():
    return canonical_generators()


def brute_sl2(p):
    """All det-1 matrices mod p by exhaustive search over p^4 tuples."""
    return {m for m in itertools.product(range(p), repeat=4) if (m[0] * m[3] - m[1] * m[2]) % p == 1}


def py_mul(x, y, p):
    a, b, c, d = x
    e, f, g, h = y
    return ((a * e + b * g) % p, (a * f + b * h) % p, (c * e + d * g) % p, (c * f + d * h) % p)


def py_closure(p, mats):
    """Set-based BFS closure under right multiplication, independent of the library."""
    sym = []
    for m in mats:
        a, b, c, d = (v % p for v in m)
        sym += [(a, b, c, d), (d, -b % p, -c % p, a)]
    start = (1, 0, 0, 1)
    seen = {start}
    frontier = [start]
    while frontier:
        nxt = []
        for g in frontier:
            for s in sym:
                h = py_mul(g, s, p)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    return seen


# one line per acceptance criterion, printed after the run
ACCEPTANCE: list[tuple[str, bool, str]] = []


def record(criterion: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE.append((criterion, bool(ok), detail))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
