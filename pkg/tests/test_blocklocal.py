"""Block-local executions under reduced contexts."""

import pytest

from stellite import lang
from stellite.axiomatic import Action, derive_hb, valid
from stellite.blocklocal import (
    CALL,
    RET,
    CutContext,
    block_local,
    code_of,
    contx_of,
    downclosure,
    sigma_space,
)

from oracles import forced_read_instance_execs, single_load_instance_execs


def test_sigma_space_pins_dead_locals_to_zero():
    assert sigma_space(("l", "m"), {"l"}, {0, 1}) == [
        {"l": 0, "m": 0},
        {"l": 1, "m": 0},
    ]
    assert sigma_space((), set(), {0, 1}) == [{}]


def test_empty_context_wraps_the_blocks_own_executions():
    execs = block_local(lang.parse_block("st(x,l)"), CutContext(()))
    assert execs
    for X in execs:
        assert contx_of(X) == ()
        code = code_of(X)
        assert len(code) == 1 and code[0].kind == "store"
        assert (CALL, code[0].aid) in X.sb and (code[0].aid, RET) in X.sb
        assert valid(X)


def test_empty_block_still_emits_call_and_ret():
    execs = block_local(lang.parse_block("skip"), CutContext(()))
    assert len(execs) == 1
    X = execs[0]
    assert {a.aid for a in X.actions} == {CALL, RET}
    assert X.action(CALL).vals == X.action(RET).vals


def test_context_relation_is_included_in_happens_before():
    for X in forced_read_instance_execs():
        assert X.r_ctx <= X.hb
        assert valid(X)


def test_forced_read_instance_has_exactly_the_expected_executions():
    execs = forced_read_instance_execs()
    assert len(execs) == 3

    def flag_rf(X):
        return any(w == "wf" for (w, r) in X.rf
                   if X.by_id()[r].gvar == "f")

    def xval(X):
        [lx] = [a for a in code_of(X) if a.gvar == "x"]
        return lx.vals[0]

    # when the flag read sees the context flag store, the data read is
    # forced to 1 (the required ordering excludes both 0 and 2)
    assert any(flag_rf(X) and xval(X) == 1 for X in execs)
    assert not any(flag_rf(X) and xval(X) != 1 for X in execs)
    # the ordering also fixes the data stores' modification order
    for X in execs:
        assert ("w2", "w1") in X.mo


def test_single_load_context_must_read_the_block_store():
    execs = single_load_instance_execs()
    assert execs
    for X in execs:
        [b] = [a.aid for a in code_of(X)]
        assert (b, "a1") in X.rf


def test_context_actions_carry_no_sequenced_before():
    for X in forced_read_instance_execs():
        ctx = {a.aid for a in contx_of(X)}
        assert not any(u in ctx or v in ctx for (u, v) in X.sb)


def test_context_validation_rejects_malformed_inputs():
    B = lang.parse_block("st(x,l)")
    with pytest.raises(ValueError):
        block_local(B, CutContext((Action("a", "load", "x", (0,), "code"),)))
    with pytest.raises(ValueError):
        block_local(
            B,
            CutContext(
                (Action("a", "load", "x", (0,), "context"),),
                R=frozenset({("call", "a")}),  # wrong direction
            ),
        )
    with pytest.raises(ValueError):
        block_local(
            B,
            CutContext(
                (
                    Action("a", "load", "x", (0,), "context"),
                    Action("b", "store", "x", (1,), "context"),
                ),
                S=frozenset({("a", "b")}),  # not an LL/SC pair
            ),
        )
    with pytest.raises(ValueError):
        block_local(
            B, CutContext((Action("a", "load", "y", (0,), "context"),))
        )  # outside the block's variable set


def test_downclosure_of_a_three_action_chain_has_four_prefixes():
    acts = tuple(
        Action(i, "store", "x", (1,), "code") for i in ("a", "b", "c")
    )
    sb = frozenset({("a", "b"), ("b", "c"), ("a", "c")})
    from stellite.axiomatic import Execution

    X = Execution(
        actions=acts,
        sb=sb,
        at=frozenset(),
        rf=frozenset(),
        mo=frozenset({("a", "b"), ("b", "c"), ("a", "c")}),
        hb=derive_hb(acts, sb, frozenset()),
    )
    dc = downclosure(X)
    assert len(dc) == 4
    assert X in dc
    sizes = sorted(len(Y.actions) for Y in dc)
    assert sizes == [0, 1, 2, 3]


def test_downclosure_members_are_predecessor_closed():
    for X in single_load_instance_execs():
        for Y in downclosure(X):
            keep = {a.aid for a in Y.actions}
            for (u, v) in set(X.hb) | set(X.rf):
                if v in keep:
                    assert u in keep
        assert X in downclosure(X)
