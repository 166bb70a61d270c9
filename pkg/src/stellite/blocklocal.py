"""Block-local executions: a code-block run under a reduced context.

The context is abstracted to a set of actions A (no syntax, no sb), a
context happens-before relation R over A and the call/ret boundary, and a
context atomicity relation S pairing context LL/SC actions. Boundary
actions call(sigma) / ret(sigma') record the local-variable vectors at
block entry and exit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import lang
from .axiomatic import (
    Action,
    BudgetExceeded,
    Execution,
    complete,
    derive_at,
    is_read,
    is_write,
)

CALL = "call"
RET = "ret"


@dataclass(frozen=True)
class CutContext:
    actions: tuple  # context Actions
    R: frozenset = frozenset()  # pairs over action ids plus 'call'/'ret'
    S: frozenset = frozenset()  # (LL id, SC id) pairs

    def ids(self):
        return {a.aid for a in self.actions}


def sigma_space(locals_order, live, values):
    """All local maps over the ordered local set with live-in locals
    ranging over Val and the rest pinned to 0."""
    live = [l for l in locals_order if l in live]
    out = []
    for combo in itertools.product(sorted(values), repeat=len(live)):
        sg = {l: 0 for l in locals_order}
        sg.update(dict(zip(live, combo)))
        out.append(sg)
    return out or [{l: 0 for l in locals_order}]


def _check_context(ctx: CutContext, vs):
    paired = {i for pair in ctx.S for i in pair}
    for a in ctx.actions:
        if a.origin != "context":
            raise ValueError("context actions must carry the context origin")
        if a.gvar == lang.FENCE_VAR and not (
            a.kind in ("LL", "SC") and a.aid in paired
        ):
            # at the fence location the context may only contain fences
            raise ValueError(
                "context actions at the fence location must be paired LL/SC"
            )
        if vs is not None and a.gvar not in vs and a.gvar != lang.FENCE_VAR:
            raise ValueError(
                f"context action {a} is outside the block's variable set"
            )
    ids = ctx.ids()
    dom = ids | {CALL}
    cod = ids | {RET}
    for (u, v) in ctx.R:
        if not ((u in ids and v in ids) or (u in ids and v == CALL)
                or (u == RET and v in ids)):
            raise ValueError(f"R edge ({u},{v}) outside its allowed shape")
    seen_ll, seen_sc = set(), set()
    byid = {a.aid: a for a in ctx.actions}
    for (ll, sc) in ctx.S:
        if byid[ll].kind != "LL" or byid[sc].kind != "SC":
            raise ValueError("S must pair an LL with an SC")
        if byid[ll].gvar != byid[sc].gvar:
            raise ValueError("S pairs must share a location")
        if ll in seen_ll or sc in seen_sc:
            raise ValueError("S must be an injective function")
        seen_ll.add(ll)
        seen_sc.add(sc)


def block_local(
    B,
    ctx: CutContext,
    *,
    values=frozenset({0, 1}),
    mode="AT",
    locals_order=None,
    live=None,
    sigmas=None,
    limit=None,
    check_vs=True,
):
    """All executions of block B under the reduced context ctx.

    Code actions come from the thread-local semantics and sit sb-between
    call and ret; context actions carry no sb; R seeds hb and S extends at.
    """
    B = tuple(B)
    _check_context(ctx, lang.vars_of(B) if check_vs else None)
    if locals_order is None:
        locals_order = lang.locals_of(B)
    if live is None:
        live = lang.live_in(B)
    if sigmas is None:
        sigmas = sigma_space(locals_order, live, values)
    values = frozenset(values) | lang.literals_of(B)
    out = []
    for sigma in sigmas:
        callv = tuple(sigma[l] for l in locals_order)
        for (code, sbc, sigma2) in lang.thread_local_block(
            B, sigma, values, origin="code"
        ):
            retv = tuple(sigma2[l] for l in locals_order)
            call = Action(CALL, "call", None, callv, "boundary")
            ret = Action(RET, "ret", None, retv, "boundary")
            acts = (call,) + code + (ret,) + tuple(ctx.actions)
            sb = set(sbc)
            for c in code:
                sb.add((CALL, c.aid))
                sb.add((c.aid, RET))
            sb.add((CALL, RET))
            at = derive_at(code, frozenset(sb)) | ctx.S
            # a context LL is ordered before its paired SC in any real context
            r_ctx = frozenset(ctx.R) | frozenset(ctx.S)
            for X in complete(
                acts,
                frozenset(sb),
                frozenset(at),
                r_ctx=r_ctx,
                mode=mode,
                locals_order=locals_order,
                limit=limit,
            ):
                out.append(X)
                if limit is not None and len(out) > limit:
                    raise BudgetExceeded(
                        "block-local execution budget exceeded"
                    )
    return out


def code_of(X: Execution):
    return tuple(a for a in X.actions if a.origin == "code")


def contx_of(X: Execution):
    return tuple(a for a in X.actions if a.origin == "context")


def downclosure(X: Execution):
    """All projections of X to action subsets closed under (hb ∪ rf)+
    predecessors, relations projected componentwise."""
    ids = [a.aid for a in X.actions]
    n = len(ids)
    edges = set(X.hb) | set(X.rf)
    preds = {i: set() for i in ids}
    # transitive closure of predecessors
    from .axiomatic import closure as _cl

    for (u, v) in _cl(edges):
        preds[v].add(u)
    out = []
    for bits in itertools.product((False, True), repeat=n):
        keep = {i for i, b in zip(ids, bits) if b}
        if any(not preds[i] <= keep for i in keep):
            continue
        out.append(project(X, keep))
    return out


def project(X: Execution, keep) -> Execution:
    keep = set(keep)
    acts = tuple(a for a in X.actions if a.aid in keep)
    pr = lambda rel: frozenset(
        (u, v) for (u, v) in rel if u in keep and v in keep
    )
    return Execution(
        actions=acts,
        sb=pr(X.sb),
        at=pr(X.at),
        rf=pr(X.rf),
        mo=pr(X.mo),
        hb=pr(X.hb),
        mode=X.mode,
        r_ctx=pr(X.r_ctx),
        locals_order=X.locals_order,
    )
