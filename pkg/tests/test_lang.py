"""Surface syntax, thread-local semantics and static queries."""

import pytest
from hypothesis import given, settings, strategies as st

from stellite import lang
from stellite.lang import ParseError


def pre_executions(text, sigma=None, values=frozenset({0, 1})):
    B = lang.parse_block(text)
    sg = {l: 0 for l in lang.locals_of(B)}
    sg.update(sigma or {})
    return lang.thread_local_block(B, sg, values)


# ---------------------------------------------------------------------------
# parsing


def test_parse_store_and_unparse_round_trip():
    B = lang.parse_block("st(x, l); m := ld(y)")
    assert lang.unparse_block(B) == "st(x, l); m := ld(y)"
    assert lang.parse_block(lang.unparse_block(B)) == B


def test_parse_transformation_splits_original_and_replacement():
    B2, B1 = lang.parse_transformation("st(x,l) ~> st(x,l); st(x,l)")
    assert lang.unparse_block(B2) == "st(x, l)"
    assert lang.unparse_block(B1) == "st(x, l); st(x, l)"


def test_skip_is_the_empty_block():
    assert lang.parse_block("skip") == ()
    assert pre_executions("skip") == [((), frozenset(), {})]


def test_sc_without_preceding_ll_is_rejected():
    with pytest.raises(ParseError):
        lang.parse_block("m := SC(x, l)")


def test_fence_variable_is_reserved_in_source():
    with pytest.raises(ParseError):
        lang.parse_block("st(fen, l)")


def test_global_cannot_mix_atomic_and_nonatomic_access():
    with pytest.raises(ParseError):
        lang.parse_block("st(x,l); ldna(x)")
    with pytest.raises(ParseError):
        lang.parse_transformation("st(x,l) ~> stna(x,l)")


def test_at_most_one_hole_and_none_in_blocks():
    with pytest.raises(ParseError):
        lang.parse_program("{-} ||| {-}")
    with pytest.raises(ParseError):
        lang.parse_block("{-}")
    prog = lang.parse_program("{-} ||| l := ld(x)")
    assert len(lang.threads_of(prog)) == 2


# ---------------------------------------------------------------------------
# thread-local semantics


def test_store_emits_current_local_value_and_keeps_sigma():
    [(acts, sb, sigma2)] = pre_executions("st(x, l)", {"l": 1})
    assert len(acts) == 1
    assert (acts[0].kind, acts[0].gvar, acts[0].vals) == ("store", "x", (1,))
    assert sigma2 == {"l": 1}


def test_load_updates_local_and_value_ranges_over_domain():
    res = pre_executions("l := ld(x)")
    assert sorted(sg["l"] for (_, _, sg) in res) == [0, 1]
    for (acts, _, sg) in res:
        assert acts[0].kind == "load" and acts[0].vals == (sg["l"],)


def test_bare_load_touches_no_local():
    res = pre_executions("ld(x)")
    assert len(res) == 2
    for (acts, _, sg) in res:
        assert sg == {} and acts[0].kind == "load"
    assert lang.locals_of(lang.parse_block("ld(x)")) == ()


def test_fence_is_a_paired_ll_sc_on_the_reserved_global():
    res = pre_executions("fc")
    assert len(res) >= 1
    for (acts, sb, _) in res:
        kinds = [a.kind for a in acts]
        assert kinds in (["LL", "SC"], ["LL", "SC_f"])
        assert all(a.gvar == lang.FENCE_VAR for a in acts)
        assert (acts[0].aid, acts[1].aid) in sb


def test_assignment_evaluates_literals_and_comparisons():
    [(acts, _, sg)] = pre_executions("l := 5; m := l == 5", values={0, 1, 5})
    assert acts == ()
    assert sg == {"l": 5, "m": 1}


def test_if_takes_then_branch_on_any_nonzero_value():
    [(acts, _, _)] = pre_executions(
        "if (l) { st(x,1) } else { st(y,1) }", {"l": 2}, values={0, 1, 2}
    )
    assert acts[0].gvar == "x"
    [(acts, _, _)] = pre_executions(
        "if (l) { st(x,1) } else { st(y,1) }", {"l": 0}
    )
    assert acts[0].gvar == "y"


def test_parallel_composition_returns_the_input_sigma():
    prog = lang.parse_program("st(x,1) ||| l := ld(x)")
    res = lang.thread_local(prog, {"l": 0})
    assert res and all(sg == {"l": 0} for (_, _, sg) in res)


def test_pre_execution_count_lower_bound_for_global_reads():
    # n value-free reads over k values give at least k^n pre-executions
    assert len(pre_executions("ld(x); ld(x)")) >= 4
    assert len(pre_executions("ld(x); ld(y); ld(x)", values={0, 1, 2})) >= 27


# ---------------------------------------------------------------------------
# static queries


def test_vars_and_locals_and_literals():
    B = lang.parse_block("l := ld(x); st(y, l); m := 5")
    assert lang.vars_of(B) == frozenset({"x", "y"})
    assert lang.locals_of(B) == ("l", "m")
    assert 5 in lang.literals_of(B)
    assert lang.na_vars_of(lang.parse_block("stna(z, l)")) == frozenset({"z"})


def test_live_in_is_read_before_written():
    assert "l" in lang.live_in(lang.parse_block("st(x, l)"))
    assert "l" not in lang.live_in(lang.parse_block("l := ld(x); st(y, l)"))


def test_substitute_fills_the_hole_and_round_trips():
    ctx = lang.parse_program("st(y,1); {-} ||| ld(y)")
    filled = lang.substitute(ctx, lang.parse_block("st(x,1)"))
    text = lang.unparse(filled)
    assert "st(x, 1)" in text
    reparsed = lang.parse_program(text)
    assert lang.vars_of(reparsed) == frozenset({"x", "y"})


# ---------------------------------------------------------------------------
# structural properties over generated blocks

_stmt = st.sampled_from(
    [
        "st(x,l)",
        "st(y,m)",
        "l := ld(x)",
        "m := ld(y)",
        "ld(x)",
        "fc",
        "l := 1",
    ]
)


@settings(max_examples=40, deadline=None)
@given(st.lists(_stmt, min_size=0, max_size=4))
def test_pre_execution_ids_unique_and_sb_total_order(stmts):
    text = "; ".join(stmts) or "skip"
    for (acts, sb, _) in pre_executions(text):
        ids = [a.aid for a in acts]
        assert len(ids) == len(set(ids))
        assert all(u != v for (u, v) in sb)
        # transitive
        for (a, b) in sb:
            for (c, d) in sb:
                if b == c:
                    assert (a, d) in sb
        # total over the block's actions
        for i, u in enumerate(ids):
            for v in ids[i + 1 :]:
                assert (u, v) in sb or (v, u) in sb


@settings(max_examples=40, deadline=None)
@given(st.lists(_stmt, min_size=0, max_size=4))
def test_unparse_parse_round_trip(stmts):
    text = "; ".join(stmts) or "skip"
    B = lang.parse_block(text)
    assert lang.parse_block(lang.unparse_block(B)) == B
