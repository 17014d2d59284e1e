import pytest
from hypothesis import given

from normbpa.oracle import (
    FiniteLts,
    OracleSession,
    Overflow,
    check_bisimulation,
    computation_problems,
    explore_fragment,
    oracle_decide,
    relative_bisim_finite,
)
from normbpa.refine import decide, qualified_sets
from normbpa.system import build_system

from .conftest import system_and_processes, systems


def test_fragment_examples(ex1):
    p = ex1.process
    lts = explore_fragment(ex1, ex1.ref_set("B,C"), [p("A0"), p("A1"), ()])
    assert len(lts) == 3
    lts = explore_fragment(ex1, frozenset(), [()])
    assert len(lts) == 1 and lts.edges == [[]]


def test_fragment_of_example_one_doubled(ex1):
    lts = explore_fragment(ex1, frozenset(), [ex1.process("A1.A1")])
    assert sorted(ex1.show(s) for s in lts.states) == ["A0", "A0.A1", "A1", "A1.A1", "B", "B.A1", "eps"]


def test_fragment_caps():
    sys = build_system(["X"], [("X", "a", ["X", "X"]), ("X", "b", [])])
    with pytest.raises(Overflow) as err:
        explore_fragment(sys, frozenset(), [(0,)], max_len=5)
    assert err.value.which == "length"
    with pytest.raises(Overflow) as err:
        explore_fragment(sys, frozenset(), [(0,)], max_states=3)
    assert err.value.which == "state"
    assert oracle_decide(sys, frozenset(), (0,), (0, 0)) is None


def test_relation_examples(ex1, ex2):
    p = ex1.process
    lts = explore_fragment(ex1, ex1.ref_set("B,C"), [p("A0"), p("A1")])
    cls = relative_bisim_finite(lts)
    assert cls[lts.seeds[0]] == cls[lts.seeds[1]]
    assert decide(ex1, ex1.ref_set("B,C"), p("A0"), p("A1"))
    single = FiniteLts([()], {(): 0}, [[]], [True], [0])
    assert relative_bisim_finite(single) == [0]
    assert oracle_decide(ex2, ex2.ref_set("A1"), ex2.process("A0"), ()) is False


def test_oracle_decide_examples(ex1):
    p = ex1.process
    assert oracle_decide(ex1, frozenset(), p("A0.C"), p("A1.C")) is True
    assert oracle_decide(ex1, frozenset(), p("A0"), p("A1")) is False
    assert oracle_decide(ex1, ex1.ref_set("B"), p("A1.B"), p("A1.B")) is True


def test_session_answers_only_inside_its_fragment(ex1):
    p = ex1.process
    session = OracleSession(ex1, frozenset(), [p("A0.C"), p("A1.C")])
    assert session.complete
    assert session.equivalent(p("A0.C"), p("A1.C")) is True
    assert session.equivalent(p("A0.A0.A0.C"), p("A0.C")) is None


def test_inert_step_is_absorbed():
    # X -tau-> Y is inert: both end in the same a-step to eps
    sys = build_system(["X", "Y"], [("X", "tau", ["Y"]), ("Y", "a", [])])
    assert oracle_decide(sys, frozenset(), (0,), (1,)) is True


def test_non_inert_step_is_not_absorbed():
    sys = build_system(["X", "Y"], [("X", "tau", ["Y"]), ("X", "b", []), ("Y", "a", [])])
    assert oracle_decide(sys, frozenset(), (0,), (1,)) is False


def test_check_bisimulation_rejects_coarse_relation(ex1):
    lts = explore_fragment(ex1, frozenset(), [ex1.process("A1.A1")])
    coarse = [0 if g else 1 for g in lts.ground]
    assert check_bisimulation(lts, coarse)
    assert check_bisimulation(lts, relative_bisim_finite(lts)) == []


# -- properties ----------------------------------------------------------------------


def fragments(sys, seeds):
    for r in qualified_sets(sys):
        try:
            lts = explore_fragment(sys, r, seeds, max_states=500, max_len=10)
        except Overflow:
            continue
        yield r, lts, relative_bisim_finite(lts)


@given(system_and_processes(2))
def test_result_is_a_relative_bisimulation(args):
    sys, alpha, beta = args
    for _, lts, cls in fragments(sys, [alpha, beta]):
        assert check_bisimulation(lts, cls) == []
        assert computation_problems(lts, cls) == []


@given(system_and_processes(2))
def test_oracle_is_monotone_in_the_reference_set(args):
    sys, alpha, beta = args
    verdicts = {}
    for r, lts, cls in fragments(sys, [alpha, beta]):
        verdicts[r] = cls[lts.seeds[0]] == cls[lts.seeds[1]]
    for small, v in verdicts.items():
        for big, w in verdicts.items():
            if small < big and v:
                assert w


@given(system_and_processes(4))
def test_oracle_congruence_sample(args):
    sys, a, b, c, d = args
    refs = qualified_sets(sys)
    for r in refs:
        if oracle_decide(sys, r, c, d, 500, 10) and oracle_decide(sys, frozenset(), a, b, 500, 10):
            assert oracle_decide(sys, r, a + c, b + d, 500, 10) is not False


@given(systems(max_consts=4))
def test_single_fragment_agrees_with_pairwise_queries(sys):
    seeds = [(x,) for x in range(sys.size)] + [()]
    try:
        lts = explore_fragment(sys, frozenset(), seeds, max_states=500, max_len=10)
    except Overflow:
        return
    cls = relative_bisim_finite(lts)
    for i, s in enumerate(seeds):
        for t in seeds[i + 1 :]:
            assert oracle_decide(sys, frozenset(), s, t) == (cls[lts.index[s]] == cls[lts.index[t]])


def test_computation_problems_flags_a_broken_chain():
    lts = FiniteLts([(0,), (1,), (2,)], {}, [[("tau", 1)], [("tau", 2)], []], [False] * 3, [])
    assert computation_problems(lts, [0, 1, 0])
    assert computation_problems(lts, [0, 0, 0]) == []
