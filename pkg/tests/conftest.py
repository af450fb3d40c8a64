import itertools

import numpy as np
import pytest

from robustsubmin.core import ConcaveOverModular, ModularFunction, SqrtModular


def all_subsets(n):
    for r in range(n + 1):
        yield from itertools.combinations(range(n), r)


def random_com(rng, n, k=3, p=0.5, zero_ok=False):
    labels = rng.integers(0, k, n)
    w = rng.random(n) if zero_ok else rng.uniform(0.05, 1.0, n)
    return ConcaveOverModular([np.flatnonzero(labels == j) for j in range(k)], w, p)


def random_function(rng, n):
    kind = rng.integers(0, 3)
    if kind == 0:
        return ModularFunction(rng.uniform(0.05, 1.0, n))
    if kind == 1:
        return SqrtModular(rng.uniform(0.05, 1.0, n))
    return random_com(rng, n, k=int(rng.integers(1, 4)), p=float(rng.uniform(0.3, 1.0)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def com_instance(rng, constraint, l=3, clusters=3, p=0.5, shared=True):
    """l concave-over-modular functions with random clusterings on the constraint's ground set."""
    from robustsubmin.core import RobustObjective
    from robustsubmin.solvers import RobustInstance

    n = constraint.n
    w = rng.random(n)
    fs = []
    for _ in range(l):
        wi = w if shared else rng.random(n)
        fs.append(random_com_with(rng, wi, clusters, p))
    return RobustInstance(RobustObjective(tuple(fs)), constraint)


def random_com_with(rng, w, clusters, p):
    labels = rng.integers(0, clusters, len(w))
    return ConcaveOverModular([np.flatnonzero(labels == j) for j in range(clusters)], w, p)


# acceptance criteria record their verdicts here; printed after the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
