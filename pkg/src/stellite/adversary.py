"""Adversarial context synthesis.

From a block-local execution X this module builds a syntactic context
C_X that forces any embedded block to replay X's interface: watchdog
variables enforce each context happens-before edge, monitor variables
detect happens-before edges the history does not guarantee, and value
checks compare reads and block-boundary local vectors against X. Any
mismatch writes the observable error variable and halts the thread.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import lang
from .axiomatic import (
    Action,
    EnumConfig,
    closure,
    enumerate_program,
    is_write,
)
from .blocklocal import CALL, RET, code_of, contx_of
from .history import hist
from .lang import (
    Assign,
    CodeRegion,
    HoleStmt,
    IfStmt,
    LLStmt,
    LoadStmt,
    Program,
    SCStmt,
    StoreStmt,
)

ERROR_VAR = "e"
CALL_MARK = "kcall"
RET_MARK = "kret"


@dataclass
class AdversaryContext:
    program: Program  # with one hole
    hole_thread: int
    action_thread: dict  # context action id -> thread index
    watch_r: dict  # R edge -> watchdog variable
    watch_h: dict  # monitored edge -> monitor variable
    interface_vars: frozenset
    locals_order: tuple


def _san(aid):
    return "".join(c if c.isalnum() else "_" for c in str(aid))


def closed_R(X) -> frozenset:
    """The happens-before consequences of the context relation, projected
    to its allowed shape; this is what the construction can reproduce."""
    ctx = {a.aid for a in contx_of(X)}
    return frozenset(
        (u, v)
        for (u, v) in X.hb
        if (u in ctx and v in ctx)
        or (u in ctx and v == CALL)
        or (u == RET and v in ctx)
    )


def _fresh_local(counter):
    n = counter[0]
    counter[0] += 1
    return f"w{n}"


def build_context(X, R=None, G=None) -> AdversaryContext:
    """The adversarial context for X, its context relation R, and its
    guarantee G. Errors are signalled on the variable e and halt the
    thread by construction (all continuation code is nested under the
    non-error branch)."""
    ctxacts = contx_of(X)
    byid = X.by_id()
    if R is None:
        R = closed_R(X)
    if G is None:
        G = hist(X).G
    ctx_ids = [a.aid for a in ctxacts]
    vs = {a.gvar for a in ctxacts} | {a.gvar for a in code_of(X)}
    for v in (ERROR_VAR, CALL_MARK, RET_MARK):
        if v in vs:
            raise ValueError(f"variable {v!r} collides with the block's")

    # chain LL/SC pairs onto shared threads
    pair_of = {ll: sc for (ll, sc) in X.at
               if ll in ctx_ids and sc in ctx_ids}
    paired = set(pair_of) | set(pair_of.values())
    chains = [[ll, sc] for ll, sc in sorted(pair_of.items())]
    singles = [[i] for i in ctx_ids if i not in paired]
    chain_edges = {(ll, sc) for ll, sc in pair_of.items()}

    # monitored edges: guarantee-shaped pairs neither guaranteed by X nor
    # implied by R or by pair chaining
    Rrev = {(v, u) for (u, v) in R}
    dom = set()
    for u in ctx_ids + [CALL]:
        for v in ctx_ids + [RET]:
            if u == v or (u == CALL and v == RET):
                continue
            if u == CALL or v == RET or (u in ctx_ids and v in ctx_ids):
                dom.add((u, v))
    H = dom - set(G) - Rrev - chain_edges

    watch_r = {(u, v): f"h_{_san(u)}_{_san(v)}" for (u, v) in R}
    watch_h = {(u, v): f"g_{_san(u)}_{_san(v)}" for (u, v) in H}
    counter = [0]

    def guard_read(var, then_branch, err_on_one):
        l = _fresh_local(counter)
        load = LoadStmt(l, var)
        err = (StoreStmt(ERROR_VAR, ("lit", 1)),)
        if err_on_one:
            return [load, IfStmt(l, err, tuple(then_branch))]
        return [load, IfStmt(l, tuple(then_branch), err)]

    def value_check(local, expected, rest):
        t = _fresh_local(counter)
        err = (StoreStmt(ERROR_VAR, ("lit", 1)),)
        return [
            Assign(t, ("eq", ("var", local), ("lit", expected))),
            IfStmt(t, tuple(rest), err),
        ]

    def check_action(m, rest):
        a = byid[m]
        if a.kind == "load":
            l = _fresh_local(counter)
            return [LoadStmt(l, a.gvar)] + value_check(l, a.vals[0], rest)
        if a.kind == "store":
            return [StoreStmt(a.gvar, ("lit", a.vals[0]))] + list(rest)
        if a.kind == "LL":
            l = _fresh_local(counter)
            return [LLStmt(l, a.gvar)] + value_check(l, a.vals[0], rest)
        if a.kind == "SC":
            src = _fresh_local(counter)
            res = _fresh_local(counter)
            err = (StoreStmt(ERROR_VAR, ("lit", 1)),)
            return [
                Assign(src, ("lit", a.vals[0])),
                SCStmt(res, a.gvar, src),
                IfStmt(res, tuple(rest), err),
            ]
        raise ValueError(f"unsupported context action kind {a.kind}")

    def check_hole(rest):
        callv = byid[CALL].vals
        retv = byid[RET].vals
        order = X.locals_order
        body = list(rest)
        for l, v in reversed(list(zip(order, retv))):
            body = value_check(l, v, body)
        body = (
            [Assign(l, ("lit", v)) for l, v in zip(order, callv)]
            + [StoreStmt(CALL_MARK, ("lit", 1)), HoleStmt(),
               StoreStmt(RET_MARK, ("lit", 1))]
            + body
        )
        return body

    def wrap(m, rest):
        """a(m): R-edge guards, monitor stores, the checked action, monitor
        guards, R-edge stores, then the continuation."""
        entry = CALL if m == "hole" else m
        exit_ = RET if m == "hole" else m
        tail = [StoreStmt(watch_r[(exit_, v)], ("lit", 1))
                for (u, v) in sorted(R) if u == exit_] + list(rest)
        for (u, v) in sorted(H, reverse=True):
            if v == exit_:
                tail = guard_read(watch_h[(u, v)], tail, err_on_one=True)
        if m == "hole":
            body = check_hole(tail)
        else:
            body = check_action(m, tail)
        body = [StoreStmt(watch_h[(u, v)], ("lit", 1))
                for (u, v) in sorted(H) if u == entry] + body
        for (u, v) in sorted(R, reverse=True):
            if v == entry:
                body = guard_read(watch_r[(u, v)], body, err_on_one=False)
        return body

    threads = []
    action_thread = {}
    hole_thread = len(chains) + len(singles)  # placed last
    for group in chains + singles:
        idx = len(threads)
        body = []
        for m in reversed(group):
            body = wrap(m, body)
        for m in group:
            action_thread[m] = idx
        threads.append(tuple(body))
    threads.append(tuple(wrap("hole", [])))
    hole_thread = len(threads) - 1
    prog = Program(tuple(threads))
    lang.check_wellformed(prog)
    return AdversaryContext(
        program=prog,
        hole_thread=hole_thread,
        action_thread=action_thread,
        watch_r=watch_r,
        watch_h=watch_h,
        interface_vars=frozenset(a.gvar for a in ctxacts),
        locals_order=X.locals_order,
    )


# ---------------------------------------------------------------------------
# reproduction check


def _no_error_writes(acts):
    return not any(a.gvar == ERROR_VAR and is_write(a) for a in acts)


def _hole_region(Z):
    """The action ids sequenced between the call and ret marker stores,
    i.e. the actions the embedded block produced."""
    kc = next((a.aid for a in Z.actions
               if a.gvar == CALL_MARK and is_write(a)), None)
    kr = next((a.aid for a in Z.actions
               if a.gvar == RET_MARK and is_write(a)), None)
    if kc is None or kr is None:
        return kc, kr, set()
    region = {a.aid for a in Z.actions
              if (kc, a.aid) in Z.sb and (a.aid, kr) in Z.sb}
    return kc, kr, region


def _hb_to_all(Z, u, targets):
    return all((u, t) in Z.hb for t in targets)


def _hb_from_all(Z, targets, v):
    return all((t, v) in Z.hb for t in targets)


def reproduce(X, B, cfg: EnumConfig | None = None) -> bool:
    """Does the adversarial context for X, wrapped around B, admit an
    error-free execution whose code and interface replay X?"""
    if isinstance(B, str):
        B = lang.parse_block(B)
    ac = build_context(X)
    prog = lang.substitute(ac.program, tuple(B))
    cfg = cfg or EnumConfig()
    cfg = EnumConfig(values=cfg.values, mode=cfg.mode, limit=cfg.limit,
                     thread_prefilter=_no_error_writes)
    res = enumerate_program(prog, cfg)
    target_code = _sorted_by_sb(code_of(X), X.sb)
    # expected context-visible hb: consequences of R and of pair chaining
    chain = {(ll, sc) for (ll, sc) in X.at}
    expected = closure(set(closed_R(X)) | chain)
    ctx_ids = {a.aid for a in contx_of(X)}
    expected = frozenset(
        (u, v) for (u, v) in expected
        if (u in ctx_ids and v in ctx_ids)
        or (u in ctx_ids and v == CALL) or (u == RET and v in ctx_ids)
    )
    for Z in res.executions:
        if _matches(Z, X, ac, target_code, expected):
            return True
    return False


def _sorted_by_sb(acts, sb):
    return sorted(acts, key=lambda a: sum((b.aid, a.aid) in sb for b in acts))


def _matches(Z, X, ac, target_code, expected):
    sig = lambda a: (a.kind, a.gvar, a.vals)
    kc, kr, region = _hole_region(Z)
    if kc is None or kr is None:
        return False
    zcode = _sorted_by_sb(
        [a for a in Z.actions if a.aid in region], Z.sb
    )
    if [sig(a) for a in zcode] != [sig(a) for a in target_code]:
        return False
    f = dict(zip((a.aid for a in target_code), (a.aid for a in zcode)))
    iface = [a for a in Z.actions
             if a.gvar in ac.interface_vars and a.aid not in region]
    xctx = list(contx_of(X))
    if sorted(map(sig, iface), key=repr) != sorted(map(sig, xctx), key=repr):
        return False
    groups = {}
    for a in iface:
        groups.setdefault(sig(a), []).append(a.aid)
    keys = sorted(groups, key=repr)
    xgroups = {}
    for a in xctx:
        xgroups.setdefault(sig(a), []).append(a.aid)
    markers = {CALL: kc, RET: kr}
    code_ids = [a.aid for a in zcode]
    for combo in itertools.product(
        *(itertools.permutations(groups[k]) for k in keys)
    ):
        g = dict(f)
        for k, perm in zip(keys, combo):
            g.update(zip(xgroups[k], perm))
        g[CALL] = markers.get(CALL)
        g[RET] = markers.get(RET)
        if _relations_match(Z, X, g, code_ids) and _hbc_matches(
            Z, X, g, expected
        ):
            return True
    return False


def _relations_match(Z, X, g, code_ids):
    scope = set(g)  # code + context + boundary markers
    mem = {u for u in scope if u not in (CALL, RET)}
    zmem = {g[u] for u in mem}
    zrf = {(w, r) for (w, r) in Z.rf if w in zmem and r in zmem}
    xrf = {(g[w], g[r]) for (w, r) in X.rf if w in mem and r in mem}
    if zrf != xrf:
        return False
    zmo = {(u, v) for (u, v) in Z.mo if u in zmem and v in zmem}
    xmo = {(g[u], g[v]) for (u, v) in X.mo if u in mem and v in mem}
    if zmo != xmo:
        return False
    zsb = {(u, v) for (u, v) in Z.sb
           if u in set(code_ids) and v in set(code_ids)}
    xsb = {(g[u], g[v]) for (u, v) in X.sb
           if g.get(u) in set(code_ids) and g.get(v) in set(code_ids)}
    return zsb == xsb


def _hbc_matches(Z, X, g, expected):
    got = set()
    ctx = [a.aid for a in contx_of(X)]
    for u in ctx:
        for v in ctx:
            if u != v and (g[u], g[v]) in Z.hb:
                got.add((u, v))
        if g[CALL] is not None and (g[u], g[CALL]) in Z.hb:
            got.add((u, CALL))
        if g[RET] is not None and (g[RET], g[u]) in Z.hb:
            got.add((RET, u))
    return got == set(expected)
