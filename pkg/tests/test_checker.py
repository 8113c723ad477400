"""Property evaluation, exhaustive search, minimization, fuzzing."""

from hypothesis import given, settings
from hypothesis import strategies as st

from rclab import checker
from rclab.checker import (
    AGREEMENT,
    RWF,
    VALIDITY,
    check_agreement,
    check_rwf,
    check_validity,
    confirm_violation,
    explore,
    fuzz,
    shortest_failure,
)
from rclab.core import crash, ordinary

from conftest import make_config, make_experiment


# -- property primitives ------------------------------------------------------


def test_agreement_examples():
    assert check_agreement([(1, 1, "a"), (2, 1, "a")]) is None
    assert check_agreement([(1, 1, "a"), (2, 1, "b")]) is not None
    assert check_agreement([]) is None


def test_agreement_cross_process_scope():
    returns = [(1, 1, "a"), (1, 2, "b")]  # same process, different attempts
    assert check_agreement(returns) is not None
    assert check_agreement(returns, scope="cross-process") is None
    returns = [(1, 1, "a"), (2, 1, "b")]
    assert check_agreement(returns, scope="cross-process") is not None


def test_validity_examples():
    assert check_validity([(1, 1, "a")], ["a", "b"]) is None
    assert check_validity([(1, 1, "c")], ["a", "b"]) is not None
    assert check_validity([(1, 1, None)], ["a", "b"]) is not None


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3),
                          st.sampled_from("ab")), max_size=6))
def test_agreement_iff_single_value(returns):
    distinct = {v for _p, _a, v in returns}
    assert (check_agreement(returns) is None) == (len(distinct) <= 1)


# -- exhaustive exploration ---------------------------------------------------


def test_explore_pass_has_stats(fig1_sim1):
    verdict = explore(fig1_sim1)
    assert verdict.passed and verdict.exit_code == 0
    assert verdict.stats["states"] > 0
    assert verdict.stats["terminal_executions"] > 0
    assert verdict.stats["max_attempt_steps"] <= fig1_sim1.bound


def test_explore_accepts_config_dict():
    verdict = explore({"program": "cas-rc", "n": 2, "proposals": [1, 2]})
    assert verdict.passed


def test_explore_finds_agreement_violation():
    cfg = make_config(program="tas-cons2", failure="independent", budget=1)
    verdict = explore(cfg)
    assert verdict.result == "fail" and verdict.exit_code == 2
    assert verdict.prop in (AGREEMENT, VALIDITY)
    assert verdict.trace_labels


def test_counterexample_confirms_independently():
    cfg = make_config(program="tas-cons2", failure="independent", budget=1)
    verdict = explore(cfg)
    got = confirm_violation(cfg, verdict.trace_labels)
    assert got is not None and got[0] == verdict.prop


def test_minimized_counterexample_is_shortest():
    cfg = make_config(program="tas-cons2", failure="independent", budget=1)
    minimized = explore(cfg, minimize=True).trace_labels
    raw = explore(cfg, minimize=False).trace_labels
    assert len(minimized) <= len(raw)
    found = shortest_failure(checker.as_experiment(cfg))
    assert found is not None and len(found[0]) == len(minimized)


def test_rwf_violation_on_overloaded_fig2():
    cfg = make_config(program="fig2", f=0, failure="independent", budget=1)
    verdict = explore(cfg)
    assert verdict.result == "fail" and verdict.prop == RWF
    assert check_rwf(cfg, verdict.trace_labels) is not None


def test_check_rwf_clean_schedule():
    exp = make_experiment()
    assert check_rwf(exp, [ordinary(1)] * 6) is None


def test_memoization_does_not_change_verdict(fig1_sim1):
    with_memo = explore(fig1_sim1, memo=True)
    without = explore(fig1_sim1, memo=False)
    assert with_memo.result == without.result
    assert (with_memo.stats["terminal_executions"]
            == without.stats["terminal_executions"])


def test_depth_limit_verdict():
    cfg = make_config(failure="simultaneous", budget=1, depth=3)
    verdict = explore(cfg)
    assert verdict.result == "depth-limit" and verdict.exit_code == 3


@settings(deadline=None, max_examples=10)
@given(budget=st.integers(0, 2))
def test_budget_monotone_fig1(budget):
    # a pass with budget b implies passes with every smaller budget; fig1
    # passes at budget 2, so all smaller budgets must pass too
    cfg = make_config(failure="simultaneous", budget=budget)
    assert explore(cfg).passed


def test_crash_free_equals_none_model():
    none_v = explore(make_config(program="fig3"))
    zero_v = explore(make_config(program="fig3", failure="independent",
                                 budget=0))
    assert none_v.passed and zero_v.passed
    assert none_v.stats == zero_v.stats


# -- fuzzing ------------------------------------------------------------------


def test_fuzz_pass_is_seeded():
    cfg = make_config(program="cas-rc", failure="independent", budget=5)
    a = fuzz(cfg, seed=7, episodes=200)
    b = fuzz(cfg, seed=7, episodes=200)
    assert a.passed and a.stats == b.stats
    assert a.stats["seed"] == 7


def test_fuzz_finds_tas_cons2_violation():
    cfg = make_config(program="tas-cons2", failure="independent", budget=1)
    verdict = fuzz(cfg, seed=0, episodes=2000)
    assert verdict.result == "fail"
    assert verdict.prop in (AGREEMENT, VALIDITY)
    assert confirm_violation(cfg, verdict.trace_labels) is not None


def test_fuzz_fig2_larger_instance():
    cfg = make_config(program="fig2", n=3, f=2, proposals=[10, 20, 30],
                      failure="independent", budget=2)
    assert fuzz(cfg, seed=7, episodes=300).passed


# -- verdict serialization ----------------------------------------------------


def test_verdict_to_json_round_trips_labels():
    cfg = make_config(program="tas-cons2", failure="independent", budget=1)
    verdict = explore(cfg)
    doc = verdict.to_json()
    assert doc["result"] == "fail"
    assert doc["property"] == verdict.prop
    kinds = {lab["kind"] for lab in doc["trace"]}
    assert kinds <= {"ordinary", "crash", "crash_all"}
