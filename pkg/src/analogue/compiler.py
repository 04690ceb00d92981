"""Compile templates into linear matcher programs.

A program is a flat sequence of filter/bind/check steps plus explicit tree
navigation, emitted in pre-order per statement: the in-process equivalent of
a generated graph traversal.  Programs are immutable and safe to share across
scan workers.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .template import (ApiSymbol, SeedOrigin, Template, VarWildcard,
                       query_id_of)

FORMAT = "prog-v1"

# step ops
KIND = "kind"          # node kind must equal `kind`
SYMBOL = "symbol"      # node symbol must equal `name`
BIND = "bind"          # remember node symbol for var class `class_id`
CHECK = "check"        # node symbol must equal the remembered name
DESCEND = "descend"    # move to child `child_index`
ASCEND = "ascend"      # move back to the parent
NEXT = "next"          # advance to the next consecutive statement


@dataclass(frozen=True)
class MatcherStep:
    op: str
    node_id: int                    # template node this step came from
    kind: str | None = None
    arity: int | None = None        # template child count (exact-arity scans)
    name: str | None = None
    class_id: int | None = None
    child_index: int | None = None


@dataclass(frozen=True)
class MatcherProgram:
    steps: tuple[MatcherStep, ...]
    statement_count: int
    var_class_count: int
    template_depth: int
    query_id: str
    symbol_policy: str = "preserve"
    origin: SeedOrigin | None = None

    def step_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for s in self.steps:
            out[s.op] = out.get(s.op, 0) + 1
        return out


class ProgramFormatError(Exception):
    pass


def compile_template(t: Template) -> MatcherProgram:
    """Linearize a template: one kind filter per node in pre-order, a symbol
    filter for preserved callee names, and bind/check steps so that the first
    occurrence of each variable class binds and later ones compare."""
    steps: list[MatcherStep] = []
    bound: set[int] = set()

    def emit(node_id: int) -> None:
        n = t.nodes[node_id]
        steps.append(MatcherStep(KIND, node_id, kind=n.kind, arity=len(n.children)))
        role = n.leaf_role
        if isinstance(role, ApiSymbol):
            steps.append(MatcherStep(SYMBOL, node_id, name=role.name))
        elif isinstance(role, VarWildcard):
            if role.class_id in bound:
                steps.append(MatcherStep(CHECK, node_id, class_id=role.class_id))
            else:
                bound.add(role.class_id)
                steps.append(MatcherStep(BIND, node_id, class_id=role.class_id))
        for i, c in enumerate(n.children):
            steps.append(MatcherStep(DESCEND, c, child_index=i))
            emit(c)
            steps.append(MatcherStep(ASCEND, node_id))

    for i, root in enumerate(t.statements):
        if i:
            steps.append(MatcherStep(NEXT, root))
        emit(root)

    return MatcherProgram(steps=tuple(steps),
                          statement_count=len(t.statements),
                          var_class_count=t.var_class_count,
                          template_depth=t.template_depth,
                          query_id=query_id_of(t),
                          symbol_policy=t.symbol_policy,
                          origin=t.seed_origin)


def validate_program(p: MatcherProgram) -> None:
    """Static invariants: navigation balanced per statement, bind before check."""
    depth = 0
    bound: set[int] = set()
    for s in p.steps:
        if s.op == DESCEND:
            depth += 1
        elif s.op == ASCEND:
            depth -= 1
            if depth < 0:
                raise AssertionError("ascend below statement root")
        elif s.op == NEXT:
            if depth != 0:
                raise AssertionError("statement boundary inside a subtree")
        elif s.op == BIND:
            bound.add(s.class_id)
        elif s.op == CHECK:
            if s.class_id not in bound:
                raise AssertionError("check before bind for class %d" % s.class_id)
    if depth != 0:
        raise AssertionError("unbalanced navigation at end of program")
    next_count = sum(1 for s in p.steps if s.op == NEXT)
    if next_count + 1 != p.statement_count:
        raise AssertionError("statement_count does not match boundaries")


def export_traversal_script(p: MatcherProgram) -> str:
    """Render the program as a Gremlin-style traversal script, one line per step.

    Documentation/export only; the script is never re-imported.
    """
    lines = []
    for s in p.steps:
        if s.op == KIND:
            lines.append(".filter{ it.type == '%s' }" % s.kind)
        elif s.op == SYMBOL:
            lines.append(".filter{ it.code == '%s' }" % s.name)
        elif s.op == BIND:
            lines.append(".sideEffect{ var_%d = it.code }" % s.class_id)
        elif s.op == CHECK:
            lines.append(".filter{ it.code == var_%d }" % s.class_id)
        elif s.op == DESCEND:
            lines.append(".ithChildOf(%d)" % s.child_index)
        elif s.op == ASCEND:
            lines.append(".parent()")
        elif s.op == NEXT:
            lines.append(".nextStatement()")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------------------
# Program files ("prog-v1")
# ---------------------------------------------------------------------------

def serialize_program(p: MatcherProgram) -> str:
    steps = []
    for s in p.steps:
        rec: dict = {"op": s.op, "node": s.node_id}
        for key, val in (("kind", s.kind), ("arity", s.arity), ("name", s.name),
                         ("class", s.class_id), ("child", s.child_index)):
            if val is not None:
                rec[key] = val
        steps.append(rec)
    doc = {
        "format": FORMAT,
        "query_id": p.query_id,
        "statement_count": p.statement_count,
        "var_class_count": p.var_class_count,
        "template_depth": p.template_depth,
        "symbol_policy": p.symbol_policy,
        "origin": None if p.origin is None else {
            "path": p.origin.path,
            "lines": [p.origin.line_start, p.origin.line_end]},
        "steps": steps,
    }
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


def deserialize_program(text: str) -> MatcherProgram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProgramFormatError("not valid JSON: %s" % e) from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ProgramFormatError("missing %r header" % FORMAT)
    raw_steps = doc.get("steps")
    if not isinstance(raw_steps, list):
        raise ProgramFormatError("missing steps")
    steps = []
    for i, rec in enumerate(raw_steps):
        if not isinstance(rec, dict) or "op" not in rec or "node" not in rec:
            raise ProgramFormatError("malformed step %d" % i)
        steps.append(MatcherStep(op=rec["op"], node_id=rec["node"],
                                 kind=rec.get("kind"), arity=rec.get("arity"),
                                 name=rec.get("name"), class_id=rec.get("class"),
                                 child_index=rec.get("child")))
    origin = None
    o = doc.get("origin")
    if isinstance(o, dict):
        origin = SeedOrigin(o.get("path", "?"), o["lines"][0], o["lines"][1])
    p = MatcherProgram(steps=tuple(steps),
                       statement_count=doc.get("statement_count", 1),
                       var_class_count=doc.get("var_class_count", 0),
                       template_depth=doc.get("template_depth", 0),
                       query_id=doc.get("query_id", ""),
                       symbol_policy=doc.get("symbol_policy", "preserve"),
                       origin=origin)
    validate_program(p)
    return p
