"""Command-line front end: verify / simulate / instance / adversary.

Exit codes: 0 verified or allowed, 1 refuted or forbidden outcome found,
2 unknown (budget exceeded), 3 input error.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from . import __version__, adversary, lang, verifier
from .axiomatic import Action, EnumConfig, Execution, enumerate_program, safe
from .blocklocal import CutContext
from .cut import explain_cut
from .lang import ParseError
from .verifier import Budget, Verdict, check_cut_refinement, check_q_instance


# ---------------------------------------------------------------------------
# JSON / DOT export


def execution_to_json(X: Execution) -> dict:
    return {
        "nodes": [
            {
                "id": a.aid,
                "kind": a.kind,
                "var": a.gvar,
                "values": list(a.vals),
                "origin": a.origin,
            }
            for a in X.actions
        ],
        "edges": {
            rel: sorted(map(list, getattr(X, rel)))
            for rel in ("sb", "rf", "mo", "hb", "at")
        },
        "mode": X.mode,
        "context_hb": sorted(map(list, X.r_ctx)),
        "locals": list(X.locals_order),
        "safe": safe(X) if X.mode == "NA" else None,
    }


def execution_from_json(d: dict) -> Execution:
    acts = tuple(
        Action(n["id"], n["kind"], n["var"], tuple(n["values"]), n["origin"])
        for n in d["nodes"]
    )
    rel = lambda name: frozenset(map(tuple, d["edges"][name]))
    return Execution(
        actions=acts,
        sb=rel("sb"),
        at=rel("at"),
        rf=rel("rf"),
        mo=rel("mo"),
        hb=rel("hb"),
        mode=d.get("mode", "AT"),
        r_ctx=frozenset(map(tuple, d.get("context_hb", []))),
        locals_order=tuple(d.get("locals", [])),
    )


def history_to_json(E) -> dict:
    out = {
        "actions": [
            {"id": a.aid, "kind": a.kind, "var": a.gvar,
             "values": list(a.vals)}
            for a in sorted(E.A, key=lambda a: a.aid)
        ],
        "guarantee": sorted(map(list, E.G)),
    }
    if hasattr(E, "D"):
        out["deny"] = sorted(map(list, E.D))
    return out


def _transitive_reduce(rel):
    rel = set(rel)
    out = set(rel)
    for (a, b) in rel:
        for (c, d) in rel:
            if b == c and (a, d) in out and a != d:
                out.discard((a, d))
    return out


def execution_to_dot(X: Execution, name="execution") -> str:
    lines = [f"digraph {name} {{", "  rankdir=TB;"]
    for a in X.actions:
        shape = "box" if a.origin == "code" else (
            "ellipse" if a.origin == "context" else "diamond")
        lines.append(f'  "{a.aid}" [label="{a!r}", shape={shape}];')
    styles = {
        "sb": "solid",
        "rf": "dashed",
        "mo": "dotted",
        "at": "solid",
    }
    for rel, style in styles.items():
        for (u, v) in sorted(getattr(X, rel)):
            extra = ', color=gray40' if rel == "at" else ""
            lines.append(
                f'  "{u}" -> "{v}" [style={style}, label="{rel}"{extra}];'
            )
    for (u, v) in sorted(_transitive_reduce(X.hb)):
        lines.append(f'  "{u}" -> "{v}" [style=bold, color=gray70];')
    lines.append("}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# context files


def parse_context_file(text) -> CutContext:
    """Lines: 'ctx: [label =] action', 'R: a -> b', 'S: a -> b'.

    Actions are kind(var, value) with kinds ld/ldna/st/stna/LL/SC; labels
    default to a1, a2, ... in order of appearance.
    """
    import re

    acts, R, S = [], set(), set()
    labels = {}
    kinds = {"ld": "load", "ldna": "load_NA", "st": "store",
             "stna": "store_NA", "LL": "LL", "SC": "SC"}
    act_re = re.compile(
        r"^(?:(?P<label>\w+)\s*=\s*)?"
        r"(?P<kind>ld|ldna|st|stna|LL|SC)\s*\(\s*"
        r"(?P<var>\w+)\s*,\s*(?P<val>\d+)\s*\)$"
    )
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError(f"context file line {ln}: missing ':'")
        head, rest = line.split(":", 1)
        head, rest = head.strip(), rest.strip()
        if head == "ctx":
            m = act_re.match(rest)
            if not m:
                raise ParseError(f"context file line {ln}: bad action")
            label = m.group("label") or f"a{len(acts) + 1}"
            if label in labels or label in ("call", "ret"):
                raise ParseError(
                    f"context file line {ln}: duplicate label {label!r}"
                )
            a = Action(label, kinds[m.group("kind")], m.group("var"),
                       (int(m.group("val")),), "context")
            labels[label] = a
            acts.append(a)
        elif head in ("R", "S"):
            mm = re.match(r"^(\w+)\s*->\s*(\w+)$", rest)
            if not mm:
                raise ParseError(f"context file line {ln}: bad edge")
            (R if head == "R" else S).add((mm.group(1), mm.group(2)))
        else:
            raise ParseError(f"context file line {ln}: unknown key {head!r}")
    known = set(labels) | {"call", "ret"}
    for (u, v) in R | S:
        if u not in known or v not in known:
            raise ParseError(f"edge endpoint {u!r} or {v!r} is not defined")
    return CutContext(tuple(acts), frozenset(R), frozenset(S))


# ---------------------------------------------------------------------------
# subcommands


def _budget_from_spec(spec, base: Budget) -> Budget:
    """--budget 'x:r=2,w=3;total=8' style overrides."""
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if part.startswith("total="):
            base.total = int(part.split("=", 1)[1])
            continue
        if part.startswith("execs="):
            base.max_block_execs = int(part.split("=", 1)[1])
            continue
        loc, caps = part.split(":", 1)
        for cap in caps.split(","):
            k, v = cap.split("=")
            v = int(v)
            if k == "r":
                base.reads[loc] = v
            elif k == "w":
                base.nonvis_writes[loc] = max(
                    0, v - base.vis_writes.get(loc, 0)
                )
            elif k == "wv":
                base.vis_writes[loc] = v
            else:
                raise ValueError(f"unknown budget key {k!r}")
    return base


def cmd_verify(args) -> int:
    text = Path(args.file).read_text()
    B2, B1 = lang.parse_transformation(text)
    values = frozenset(range(args.values)) | lang.literals_of(
        B1
    ) | lang.literals_of(B2)
    budget = verifier.context_bound(B1, B2, values)
    if args.budget:
        budget = _budget_from_spec(args.budget, budget)
    t0 = time.time()
    verdict = check_cut_refinement(B1, B2, budget)
    dt = time.time() - t0
    report = {
        "transformation": text.strip(),
        "verdict": verdict.outcome,
        "stats": verdict.stats,
        "seconds": round(dt, 3),
    }
    if verdict.witness is not None:
        w = verdict.witness
        report["witness"] = {
            "context_actions": [repr(a) for a in w.context.actions],
            "context_S": sorted(map(list, w.context.S)),
            "sigma": w.sigma,
            "execution": execution_to_json(w.execution),
            "history": history_to_json(w.hist),
            "candidate_histories": [history_to_json(h) for h in w.candidates],
            "note": "the refutation may be spurious: the finite check "
                    "is adequate but not complete",
        }
        if args.explain_cut:
            report["witness"]["cut"] = explain_cut(w.execution) or "passes"
    print(f"{verdict.outcome}"
          + (f" ({verdict.stats.get('error')})" if verdict.outcome == "Unknown"
             else ""))
    print(f"contexts={verdict.stats['contexts']}"
          f" executions={verdict.stats['x1']}"
          f" cut={verdict.stats['x1_cut']} candidates={verdict.stats['x2']}"
          f" time={dt:.2f}s")
    _emit(args, report, verdict)
    return {"Verified": 0, "Refuted": 1, "Unknown": 2}[verdict.outcome]


def _emit(args, report, verdict=None):
    if getattr(args, "json", None):
        Path(args.json).write_text(json.dumps(report, indent=2, sort_keys=True))
    if getattr(args, "dot", None) and verdict is not None \
            and verdict.witness is not None:
        d = Path(args.dot)
        d.mkdir(parents=True, exist_ok=True)
        (d / "witness.dot").write_text(
            execution_to_dot(verdict.witness.execution, "witness")
        )


def cmd_simulate(args) -> int:
    text = Path(args.litmus).read_text()
    prog = lang.parse_program(text)
    mode = "NA" if args.na else "AT"
    values = frozenset(range(args.values)) | lang.literals_of(prog)
    res = enumerate_program(prog, EnumConfig(values=values, mode=mode))
    outcomes = {}
    for X, sigmas in zip(res.executions, res.outcomes):
        merged = {}
        for sg in sigmas:
            merged.update(sg)
        key = tuple(sorted(merged.items()))
        outcomes.setdefault(key, 0)
        outcomes[key] += 1
    print(f"{len(res.executions)} valid executions,"
          f" {len(outcomes)} outcomes")
    if mode == "NA":
        print("safety: " + ("UNSAFE (racy)" if res.unsafe else "safe"))
    for key in sorted(outcomes):
        desc = " ".join(f"{k}={v}" for k, v in key) or "(no locals)"
        print(f"  allowed: {desc}   [{outcomes[key]} executions]")
    report = {
        "executions": len(res.executions),
        "unsafe": res.unsafe,
        "outcomes": [dict(k) for k in sorted(outcomes)],
    }
    _emit(args, report)
    if args.forbid:
        want = {}
        for part in args.forbid.split(","):
            k, v = part.split("=")
            want[k.strip()] = int(v)
        for key in outcomes:
            d = dict(key)
            if all(d.get(k) == v for k, v in want.items()):
                print(f"forbidden outcome admitted: {args.forbid}")
                return 1
        print(f"forbidden outcome absent: {args.forbid}")
    return 0


def cmd_instance(args) -> int:
    B2, B1 = lang.parse_transformation(Path(args.file).read_text())
    ctx = parse_context_file(Path(args.context).read_text())
    mode = "NA" if args.na else "AT"
    values = frozenset(range(args.values))
    ok = check_q_instance(B1, B2, ctx, mode=mode, values=values)
    print("holds" if ok else "fails")
    _emit(args, {"instance": ok})
    return 0 if ok else 1


def cmd_adversary(args) -> int:
    X = execution_from_json(json.loads(Path(args.execfile).read_text()))
    B = lang.parse_block(Path(args.block).read_text())
    ac = adversary.build_context(X)
    print(lang.unparse(ac.program))
    if args.check:
        ok = adversary.reproduce(X, B)
        print(f"reproduction: {'ok' if ok else 'FAILED'}")
        return 0 if ok else 1
    return 0


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="stellite",
        description="Peephole-transformation checker for a release-acquire "
                    "axiomatic memory model",
    )
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("--seed", type=int, default=None,
                    help="seed for randomized self-checks")
    sub = ap.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="check a transformation file")
    v.add_argument("file")
    v.add_argument("--values", type=int, default=2)
    v.add_argument("--budget", default=None)
    v.add_argument("--json", default=None)
    v.add_argument("--dot", default=None)
    v.add_argument("--explain-cut", action="store_true")
    v.set_defaults(fn=cmd_verify)

    s = sub.add_parser("simulate", help="enumerate a litmus test")
    s.add_argument("litmus")
    s.add_argument("--na", action="store_true")
    s.add_argument("--values", type=int, default=2)
    s.add_argument("--observable", default=None)
    s.add_argument("--forbid", default=None,
                   help="fail (exit 1) if this l=v,... outcome is admitted")
    s.add_argument("--json", default=None)
    s.set_defaults(fn=cmd_simulate)

    i = sub.add_parser("instance", help="check one explicit context instance")
    i.add_argument("file")
    i.add_argument("--context", required=True)
    i.add_argument("--na", action="store_true")
    i.add_argument("--values", type=int, default=2)
    i.add_argument("--json", default=None)
    i.set_defaults(fn=cmd_instance)

    a = sub.add_parser("adversary",
                       help="emit the adversarial context of an execution")
    a.add_argument("execfile")
    a.add_argument("--block", required=True)
    a.add_argument("--check", action="store_true")
    a.set_defaults(fn=cmd_adversary)

    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 3 if e.code not in (0, None) else 0
    if args.seed is not None:
        random.seed(args.seed)
    try:
        return args.fn(args)
    except (ParseError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
