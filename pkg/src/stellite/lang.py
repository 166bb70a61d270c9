"""Surface syntax, ASTs, and the thread-local semantics.

Programs are parallel compositions of sequential blocks over shared
globals and thread-private locals. The thread-local semantics maps a
block and a local-variable map to the set of pre-executions (action set
plus sequence-before) it can produce; global reads are unconstrained and
yield every value in the value domain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .axiomatic import Action

FENCE_VAR = "fen"


class ParseError(Exception):
    pass


# ---------------------------------------------------------------------------
# AST

# expressions: ("lit", n) | ("var", l) | ("eq", a, b) | ("ne", a, b)


@dataclass(frozen=True)
class Assign:
    lhs: str
    expr: tuple


@dataclass(frozen=True)
class LoadStmt:
    lhs: str | None  # None for a bare load that discards the value
    gvar: str
    na: bool = False


@dataclass(frozen=True)
class StoreStmt:
    gvar: str
    src: tuple  # ("var", l) | ("lit", n)
    na: bool = False


@dataclass(frozen=True)
class LLStmt:
    lhs: str
    gvar: str


@dataclass(frozen=True)
class SCStmt:
    lhs: str
    gvar: str
    src: str


@dataclass(frozen=True)
class FenceStmt:
    pass


@dataclass(frozen=True)
class IfStmt:
    cond: str
    then: tuple
    els: tuple


@dataclass(frozen=True)
class HoleStmt:
    pass


@dataclass(frozen=True)
class CodeRegion:
    """Marks statements originating from a substituted code-block."""

    body: tuple


@dataclass(frozen=True)
class Program:
    threads: tuple  # tuple of statement tuples


Block = tuple  # a block is a tuple of statements


def threads_of(p) -> tuple:
    if isinstance(p, Program):
        return p.threads
    return (tuple(p),)


# ---------------------------------------------------------------------------
# tokenizer / parser

_TOKEN = re.compile(
    r"""(?P<ws>\s+|\#[^\n]*)
      | (?P<hole>\{-\})
      | (?P<sym>\|\|\||~>|:=|==|!=|[(){},;])
      | (?P<int>\d+)
      | (?P<id>[A-Za-z_][A-Za-z_0-9]*)
    """,
    re.VERBOSE,
)


def _tokenize(text):
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} at {pos}")
        pos = m.end()
        if m.lastgroup == "ws":
            continue
        kind = m.lastgroup
        val = m.group()
        toks.append((kind, val, m.start()))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, -1)

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def expect(self, val):
        k, v, p = self.next()
        if v != val:
            raise ParseError(f"expected {val!r} at {p}, found {v!r}")
        return v

    def at(self, val):
        return self.peek()[1] == val

    def done(self):
        return self.i >= len(self.toks)

    # blocks -----------------------------------------------------------

    def stmts(self, stop=()):
        out = []
        while not self.done() and self.peek()[1] not in stop:
            s = self.stmt()
            if s is not None:
                out.append(s)
            if self.at(";"):
                self.next()
            else:
                break
        return tuple(out)

    def _atom(self):
        k, v, p = self.next()
        if k == "int":
            return ("lit", int(v))
        if k == "id":
            return ("var", v)
        raise ParseError(f"expected value or local at {p}, found {v!r}")

    def stmt(self):
        k, v, p = self.peek()
        if k == "hole":
            self.next()
            return HoleStmt()
        if v == "skip":
            self.next()
            return None
        if v == "fc":
            self.next()
            return FenceStmt()
        if v in ("st", "stna"):
            self.next()
            self.expect("(")
            g = self._global()
            self.expect(",")
            src = self._atom()
            self.expect(")")
            return StoreStmt(g, src, na=(v == "stna"))
        if v in ("ld", "ldna"):
            self.next()
            self.expect("(")
            g = self._global()
            self.expect(")")
            return LoadStmt(None, g, na=(v == "ldna"))
        if v == "if":
            self.next()
            self.expect("(")
            _, cond, _ = self.next()
            self.expect(")")
            self.expect("{")
            then = self.stmts(stop=("}",))
            self.expect("}")
            els = ()
            if self.at("else"):
                self.next()
                self.expect("{")
                els = self.stmts(stop=("}",))
                self.expect("}")
            return IfStmt(cond, then, els)
        if k == "id":
            self.next()
            self.expect(":=")
            k2, v2, _ = self.peek()
            if v2 in ("ld", "ldna"):
                self.next()
                self.expect("(")
                g = self._global()
                self.expect(")")
                return LoadStmt(v, g, na=(v2 == "ldna"))
            if v2 == "LL":
                self.next()
                self.expect("(")
                g = self._global()
                self.expect(")")
                return LLStmt(v, g)
            if v2 == "SC":
                self.next()
                self.expect("(")
                g = self._global()
                self.expect(",")
                _, src, ps = self.next()
                self.expect(")")
                return SCStmt(v, g, src)
            a = self._atom()
            if self.peek()[1] in ("==", "!="):
                _, op, _ = self.next()
                b = self._atom()
                return Assign(v, ("eq" if op == "==" else "ne", a, b))
            return Assign(v, a)
        raise ParseError(f"unexpected token {v!r} at {p}")

    def _global(self):
        k, v, p = self.next()
        if k != "id":
            raise ParseError(f"expected global name at {p}, found {v!r}")
        if v == FENCE_VAR:
            raise ParseError(f"{FENCE_VAR!r} is reserved for fences")
        return v


# ---------------------------------------------------------------------------
# well-formedness


def _check_llsc(stmts, pending):
    """Walk a statement sequence tracking which locations hold an unconsumed
    LL reservation; SC without one is a pairing error."""
    for s in stmts:
        if isinstance(s, LLStmt):
            pending[s.gvar] = True
        elif isinstance(s, SCStmt):
            if not pending.get(s.gvar):
                raise ParseError(
                    f"SC on {s.gvar!r} without a preceding LL"
                )
            pending[s.gvar] = False
        elif isinstance(s, IfStmt):
            p1, p2 = dict(pending), dict(pending)
            _check_llsc(s.then, p1)
            _check_llsc(s.els, p2)
            for g in set(p1) | set(p2):
                pending[g] = p1.get(g, False) and p2.get(g, False)
        elif isinstance(s, CodeRegion):
            # reservations never span the block/context boundary
            _check_llsc(s.body, {})
            for g in list(pending):
                pending[g] = False
    return pending


def _gvar_uses(stmts, uses):
    for s in stmts:
        if isinstance(s, (LoadStmt, StoreStmt)):
            uses.setdefault(s.gvar, set()).add("na" if s.na else "at")
        elif isinstance(s, (LLStmt, SCStmt)):
            uses.setdefault(s.gvar, set()).add("at")
        elif isinstance(s, IfStmt):
            _gvar_uses(s.then, uses)
            _gvar_uses(s.els, uses)
        elif isinstance(s, CodeRegion):
            _gvar_uses(s.body, uses)
    return uses


def check_wellformed(p):
    """Syntactic invariants: LL/SC pairing, atomic/NA partitioning of
    globals, at most one hole."""
    uses = {}
    holes = 0
    for th in threads_of(p):
        _check_llsc(th, {})
        _gvar_uses(th, uses)
        holes += _count_holes(th)
    for g, m in uses.items():
        if len(m) > 1:
            raise ParseError(
                f"global {g!r} used both atomically and non-atomically"
            )
    if holes > 1:
        raise ParseError("more than one hole in context")
    return p


def _count_holes(stmts):
    n = 0
    for s in stmts:
        if isinstance(s, HoleStmt):
            n += 1
        elif isinstance(s, IfStmt):
            n += _count_holes(s.then) + _count_holes(s.els)
    return n


# ---------------------------------------------------------------------------
# entry points


def parse_block(text) -> Block:
    p = _Parser(text)
    b = p.stmts()
    if not p.done():
        k, v, pos = p.peek()
        raise ParseError(f"trailing input at {pos}: {v!r}")
    if _count_holes(b):
        raise ParseError("code-blocks may not contain holes")
    check_wellformed(b)
    return b


def parse_program(text) -> Program:
    p = _Parser(text)
    threads = [p.stmts(stop=("|||",))]
    while p.at("|||"):
        p.next()
        threads.append(p.stmts(stop=("|||",)))
    if not p.done():
        k, v, pos = p.peek()
        raise ParseError(f"trailing input at {pos}: {v!r}")
    prog = Program(tuple(threads))
    check_wellformed(prog)
    return prog


def parse_transformation(text):
    """'lhs ~> rhs' denotes replacing lhs by rhs; returns (B2, B1) where
    B2 is the original block and B1 the replacement to be checked
    against it."""
    p = _Parser(text)
    lhs = p.stmts(stop=("~>",))
    p.expect("~>")
    rhs = p.stmts()
    if not p.done():
        k, v, pos = p.peek()
        raise ParseError(f"trailing input at {pos}: {v!r}")
    for b in (lhs, rhs):
        if _count_holes(b):
            raise ParseError("code-blocks may not contain holes")
        check_wellformed(b)
    uses = _gvar_uses(lhs, _gvar_uses(rhs, {}))
    for g, m in uses.items():
        if len(m) > 1:
            raise ParseError(
                f"global {g!r} used both atomically and non-atomically"
            )
    return lhs, rhs


# ---------------------------------------------------------------------------
# static queries


def vars_of(p) -> frozenset:
    """Globals syntactically accessed; never contains the fence variable."""
    return frozenset(_gvar_uses_flat(p))


def _gvar_uses_flat(p):
    uses = {}
    for th in threads_of(p):
        _gvar_uses(th, uses)
    return uses


def na_vars_of(p) -> frozenset:
    return frozenset(
        g for g, m in _gvar_uses_flat(p).items() if "na" in m
    )


def locals_of(p) -> tuple:
    """All locals mentioned, in a fixed (sorted) order."""
    out = set()

    def atom(a):
        if a[0] == "var":
            out.add(a[1])

    def walk(stmts):
        for s in stmts:
            if isinstance(s, Assign):
                out.add(s.lhs)
                e = s.expr
                if e[0] in ("eq", "ne"):
                    atom(e[1])
                    atom(e[2])
                else:
                    atom(e)
            elif isinstance(s, LoadStmt):
                if s.lhs is not None:
                    out.add(s.lhs)
            elif isinstance(s, StoreStmt):
                atom(s.src)
            elif isinstance(s, LLStmt):
                out.add(s.lhs)
            elif isinstance(s, SCStmt):
                out.add(s.lhs)
                out.add(s.src)
            elif isinstance(s, IfStmt):
                out.add(s.cond)
                walk(s.then)
                walk(s.els)
            elif isinstance(s, CodeRegion):
                walk(s.body)

    for th in threads_of(p):
        walk(th)
    return tuple(sorted(out))


def live_in(p) -> frozenset:
    """Locals read before they are written."""
    live = set()

    def atom(a, written):
        if a[0] == "var" and a[1] not in written:
            live.add(a[1])

    def walk(stmts, written):
        for s in stmts:
            if isinstance(s, Assign):
                e = s.expr
                if e[0] in ("eq", "ne"):
                    atom(e[1], written)
                    atom(e[2], written)
                else:
                    atom(e, written)
                written.add(s.lhs)
            elif isinstance(s, LoadStmt):
                if s.lhs is not None:
                    written.add(s.lhs)
            elif isinstance(s, StoreStmt):
                atom(s.src, written)
            elif isinstance(s, LLStmt):
                written.add(s.lhs)
            elif isinstance(s, SCStmt):
                atom(("var", s.src), written)
                written.add(s.lhs)
            elif isinstance(s, IfStmt):
                atom(("var", s.cond), written)
                w1 = walk(s.then, set(written))
                w2 = walk(s.els, set(written))
                written |= w1 & w2
            elif isinstance(s, CodeRegion):
                walk(s.body, written)
        return written

    for th in threads_of(p):
        walk(th, set())
    return frozenset(live)


def literals_of(p) -> frozenset:
    """Integer literals appearing in the source; these extend Val."""
    out = set()

    def atom(a):
        if a[0] == "lit":
            out.add(a[1])

    def walk(stmts):
        for s in stmts:
            if isinstance(s, Assign):
                e = s.expr
                if e[0] in ("eq", "ne"):
                    atom(e[1])
                    atom(e[2])
                else:
                    atom(e)
            elif isinstance(s, StoreStmt):
                atom(s.src)
            elif isinstance(s, IfStmt):
                walk(s.then)
                walk(s.els)
            elif isinstance(s, CodeRegion):
                walk(s.body)

    for th in threads_of(p):
        walk(th)
    return frozenset(out)


# ---------------------------------------------------------------------------
# thread-local semantics


def _eval(expr, sigma):
    kind = expr[0]
    if kind == "lit":
        return expr[1]
    if kind == "var":
        return sigma.get(expr[1], 0)
    a = _eval(expr[1], sigma)
    b = _eval(expr[2], sigma)
    if kind == "eq":
        return 1 if a == b else 0
    return 1 if a != b else 0


def _tl(stmts, sigma, nid, values, origin, prefix):
    """Returns a list of (actions, sb, sigma', next_id)."""
    results = [((), frozenset(), sigma, nid)]
    for s in stmts:
        nxt = []
        for (acts, sb, sg, n) in results:
            for (a2, sb2, sg2, n2) in _tl_stmt(
                s, sg, n, values, origin, prefix
            ):
                seq = frozenset(
                    (x.aid, y.aid) for x in acts for y in a2
                )
                nxt.append((acts + a2, sb | sb2 | seq, sg2, n2))
        results = nxt
    return results


def _tl_stmt(s, sigma, nid, values, origin, prefix):
    mk = lambda n, kind, g, vals: Action(
        f"{prefix}{n}", kind, g, vals, origin
    )
    if isinstance(s, Assign):
        sg = dict(sigma)
        sg[s.lhs] = _eval(s.expr, sigma)
        return [((), frozenset(), sg, nid)]
    if isinstance(s, LoadStmt):
        kind = "load_NA" if s.na else "load"
        out = []
        for a in sorted(values):
            act = mk(nid, kind, s.gvar, (a,))
            sg = sigma
            if s.lhs is not None:
                sg = dict(sigma)
                sg[s.lhs] = a
            out.append(((act,), frozenset(), sg, nid + 1))
        return out
    if isinstance(s, StoreStmt):
        v = _eval(s.src, sigma)
        act = mk(nid, "store_NA" if s.na else "store", s.gvar, (v,))
        return [((act,), frozenset(), sigma, nid + 1)]
    if isinstance(s, LLStmt):
        out = []
        for a in sorted(values):
            act = mk(nid, "LL", s.gvar, (a,))
            sg = dict(sigma)
            sg[s.lhs] = a
            out.append(((act,), frozenset(), sg, nid + 1))
        return out
    if isinstance(s, SCStmt):
        v = sigma.get(s.src, 0)
        ok = mk(nid, "SC", s.gvar, (v,))
        sg1 = dict(sigma)
        sg1[s.lhs] = 1
        fail = mk(nid, "SC_f", s.gvar, ())
        sg0 = dict(sigma)
        sg0[s.lhs] = 0
        return [
            ((ok,), frozenset(), sg1, nid + 1),
            ((fail,), frozenset(), sg0, nid + 1),
        ]
    if isinstance(s, FenceStmt):
        ll = mk(nid, "LL", FENCE_VAR, (0,))
        sc = mk(nid + 1, "SC", FENCE_VAR, (0,))
        return [(
            (ll, sc),
            frozenset({(ll.aid, sc.aid)}),
            sigma,
            nid + 2,
        )]
    if isinstance(s, IfStmt):
        branch = s.els if sigma.get(s.cond, 0) == 0 else s.then
        return _tl(branch, sigma, nid, values, origin, prefix)
    if isinstance(s, CodeRegion):
        return _tl(s.body, sigma, nid, values, "code", prefix)
    if isinstance(s, HoleStmt):
        raise ParseError("cannot execute a program with an unfilled hole")
    raise TypeError(f"unknown statement {s!r}")


def thread_local_block(
    stmts, sigma, values, origin="code", prefix="b"
):
    """Pre-executions of one sequential block from a given local map.

    Returns a list of (actions, sb, final sigma).
    """
    return [
        (acts, sb, sg)
        for (acts, sb, sg, _) in _tl(
            tuple(stmts), dict(sigma), 0, frozenset(values), origin, prefix
        )
    ]


def thread_local(p, sigma, values=frozenset({0, 1})):
    """The thread-local semantics of a block or whole program.

    For a parallel composition the actions and sb of all threads are
    combined and the *input* sigma is returned unchanged.
    """
    threads = threads_of(p)
    if isinstance(p, Program) and len(threads) > 1:
        import itertools as it

        per = [
            thread_local_block(th, sigma, values, prefix=f"t{i}.")
            for i, th in enumerate(threads)
        ]
        out = []
        for combo in it.product(*per):
            acts = tuple(a for (aa, _, _) in combo for a in aa)
            sb = frozenset(pr for (_, s, _) in combo for pr in s)
            out.append((acts, sb, dict(sigma)))
        return out
    return thread_local_block(threads[0], sigma, values)


# ---------------------------------------------------------------------------
# substitution and unparsing


def substitute(ctx: Program, block) -> Program:
    """Replace the hole of a context with a code-block; the block's actions
    keep the 'code' origin via an explicit region marker."""

    def sub(stmts):
        out = []
        for s in stmts:
            if isinstance(s, HoleStmt):
                out.append(CodeRegion(tuple(block)))
            elif isinstance(s, IfStmt):
                out.append(IfStmt(s.cond, sub(s.then), sub(s.els)))
            else:
                out.append(s)
        return tuple(out)

    return Program(tuple(sub(th) for th in ctx.threads))


def _unparse_atom(a):
    return str(a[1]) if a[0] == "lit" else a[1]


def unparse_stmt(s) -> str:
    if isinstance(s, Assign):
        e = s.expr
        if e[0] in ("eq", "ne"):
            op = "==" if e[0] == "eq" else "!="
            return (
                f"{s.lhs} := {_unparse_atom(e[1])} {op} {_unparse_atom(e[2])}"
            )
        return f"{s.lhs} := {_unparse_atom(e)}"
    if isinstance(s, LoadStmt):
        op = "ldna" if s.na else "ld"
        if s.lhs is None:
            return f"{op}({s.gvar})"
        return f"{s.lhs} := {op}({s.gvar})"
    if isinstance(s, StoreStmt):
        op = "stna" if s.na else "st"
        return f"{op}({s.gvar}, {_unparse_atom(s.src)})"
    if isinstance(s, LLStmt):
        return f"{s.lhs} := LL({s.gvar})"
    if isinstance(s, SCStmt):
        return f"{s.lhs} := SC({s.gvar}, {s.src})"
    if isinstance(s, FenceStmt):
        return "fc"
    if isinstance(s, IfStmt):
        t = unparse_block(s.then) or "skip"
        body = f"if ({s.cond}) {{ {t} }}"
        if s.els:
            body += f" else {{ {unparse_block(s.els)} }}"
        return body
    if isinstance(s, HoleStmt):
        return "{-}"
    if isinstance(s, CodeRegion):
        return unparse_block(s.body)
    raise TypeError(f"unknown statement {s!r}")


def unparse_block(stmts) -> str:
    return "; ".join(unparse_stmt(s) for s in stmts) or "skip"


def unparse(p) -> str:
    return " ||| ".join(unparse_block(th) for th in threads_of(p))
