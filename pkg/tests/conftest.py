from __future__ import annotations

import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from normbpa import parse_system
from normbpa.harness import GenParams, InfeasibleParams, generate_system

ROOT = Path(__file__).resolve().parent.parent
SYSTEMS = ROOT / "systems"

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def ex1():
    return parse_system((SYSTEMS / "ex1.bpa").read_text())


@pytest.fixture(scope="session")
def ex2():
    return parse_system((SYSTEMS / "ex2.bpa").read_text())


def small_system(seed: int, consts: int = 4, rules: int = 8, ground_frac: float = 0.5, keep_expanding: float = 0.05):
    try:
        return generate_system(
            GenParams(consts=consts, rules=rules, ground_frac=ground_frac, seed=seed, keep_expanding=keep_expanding)
        )
    except InfeasibleParams:
        return None


@st.composite
def systems(draw, max_consts: int = 5):
    n = draw(st.integers(1, max_consts))
    m = draw(st.integers(n, min(12, 3 * n)))
    frac = draw(st.sampled_from([0.0, 0.25, 0.5, 0.75]))
    seed = draw(st.integers(0, 10_000))
    sys = small_system(seed, n, m, frac)
    if sys is None:
        from hypothesis import assume

        assume(False)
    return sys


@st.composite
def system_and_processes(draw, count: int = 2, max_len: int = 4):
    sys = draw(systems())
    word = st.lists(st.integers(0, sys.size - 1), max_size=max_len).map(tuple)
    return (sys, *[draw(word) for _ in range(count)])
