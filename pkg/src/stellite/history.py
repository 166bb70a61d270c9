"""Histories and extended histories of block-local executions.

A history records the context-visible happens-before footprint of a
block (the guarantee); the extended history adds the deny: edges the
context could not add as happens-before without completing a violation
of HBVSMO, COHERENCE, or RFVAL.
"""

from __future__ import annotations

from dataclasses import dataclass

from .axiomatic import Execution, is_read, is_write
from .blocklocal import CALL, RET, contx_of


@dataclass(frozen=True)
class History:
    A: frozenset  # context actions plus boundary actions, by value
    G: frozenset  # guarantee edges over ids


@dataclass(frozen=True)
class ExtendedHistory:
    A: frozenset
    G: frozenset
    D: frozenset
    acyc: frozenset = frozenset()  # acyclicity denies, kept separately


def _boundary(X: Execution):
    return tuple(a for a in X.actions if a.aid in (CALL, RET))


def hist(X: Execution) -> History:
    """Guarantee: hb projected to context-to-context, context-to-ret and
    call-to-context pairs."""
    ctx = {a.aid for a in contx_of(X)}
    G = frozenset(
        (u, v)
        for (u, v) in X.hb
        if (u in ctx and v in ctx)
        or (u in ctx and v == RET)
        or (u == CALL and v in ctx)
    )
    A = frozenset(contx_of(X)) | frozenset(_boundary(X))
    return History(A, G)


def _hb_star(X: Execution):
    star = set(X.hb)
    for a in X.actions:
        star.add((a.aid, a.aid))
    return star


def deny(X: Execution, include_acyc: bool = False):
    """Deny edges: (u,v) such that enforcing u happens-before v would
    complete an axiom violation. Computed with reflexive-transitive hb."""
    byid = X.by_id()
    star = _hb_star(X)
    ctx = {a.aid for a in contx_of(X)}
    dom = [
        (u, v)
        for u in ctx | {RET}
        for v in ctx | {CALL}
        if u != v
        and not (u == RET and v == CALL)
        and (u in ctx or v in ctx)
    ]
    writes = [a for a in X.actions if is_write(a)]
    reads = [a for a in X.actions if is_read(a)]
    rf_of = {r: w for (w, r) in X.rf}
    noderless = [
        r for r in reads if r.aid not in rf_of
    ]
    D, acyc = set(), set()
    for (u, v) in dom:
        hit = False
        # enforcing (u,v) would contradict mo
        for (w2, w1) in X.mo:
            if (w1, u) in star and (v, w2) in star:
                hit = True
                break
        if not hit:
            # enforcing (u,v) would let a read see an overwritten value
            for (w1, r) in X.rf:
                for (a, w2) in X.mo:
                    if a != w1:
                        continue
                    if (w2, u) in star and (v, r) in star:
                        hit = True
                        break
                if hit:
                    break
        if not hit:
            # enforcing (u,v) would put a write before an rf-less read
            for r in noderless:
                for w in writes:
                    if w.gvar != r.gvar:
                        continue
                    if (w.aid, u) in star and (v, r.aid) in star:
                        hit = True
                        break
                if hit:
                    break
        if hit:
            D.add((u, v))
        if (v, u) in star:
            # adding (u,v) would close an hb cycle; these edges are fully
            # determined by the guarantee, so they are kept separately
            acyc.add((u, v))
    if include_acyc:
        D |= acyc
    return frozenset(D), frozenset(acyc)


def hist_ext(X: Execution, include_acyc: bool = False) -> ExtendedHistory:
    h = hist(X)
    D, acyc = deny(X, include_acyc=include_acyc)
    return ExtendedHistory(h.A, h.G, D, acyc)


def refines_h(H1: History, H2: History) -> bool:
    """History refinement: equal action sets, the left side guarantees at
    least as much."""
    return H1.A == H2.A and H2.G <= H1.G


def refines_ext(E1: ExtendedHistory, E2: ExtendedHistory) -> bool:
    """Equal action sets; the left side guarantees and denies at least as
    much. An edge the right side denies is also covered if its reverse is
    already guaranteed on the left (the context can never add it)."""
    return (
        E1.A == E2.A
        and E2.G <= E1.G
        and E2.D <= (E1.D | E1.acyc)
    )
