from __future__ import annotations

import random

import pytest

from ybx.rmatrices import DynVector
from ybx.special_fn import Modulus

TAUS = (1j, 0.3 + 0.8j)

# acceptance criteria record their verdict here; printed in the summary
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def rc(rng: random.Random, s: float = 0.4) -> complex:
    return complex(rng.uniform(-s, s), rng.uniform(-s, s))


def generic_u(rng: random.Random, N: int, gap: float = 0.05) -> DynVector:
    while True:
        u = [rc(rng) for _ in range(N)]
        if all(abs(a - b) > gap for i, a in enumerate(u) for b in u[i + 1:]):
            return DynVector(u)


@pytest.fixture(params=TAUS, ids=["tau=i", "tau=0.3+0.8i"])
def modulus(request) -> Modulus:
    return Modulus(request.param)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240917)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[1])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
