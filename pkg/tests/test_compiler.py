from __future__ import annotations

import random

from analogue import astree
from analogue.astree import slice_statements
from analogue.compiler import (ASCEND, BIND, CHECK, DESCEND, KIND, NEXT,
                               SYMBOL, compile_template, deserialize_program,
                               export_traversal_script, serialize_program,
                               validate_program)
from analogue.corpusgen import random_snippet, render_file, render_snippet
from analogue.engine import scan_unit
from analogue.php_parser import parse_source
from analogue.template import (ApiSymbol, VarWildcard, derive_template,
                               query_id_of)


def compile_from(text: str, lines=None, **kw):
    unit = parse_source(text)
    stmts = slice_statements(unit, *lines) if lines else \
        unit.children_of(unit.nodes[unit.root])
    t = derive_template(unit, stmts, **kw)
    return unit, t, compile_template(t)


def semantic_ops(p):
    return [s.op for s in p.steps if s.op in (KIND, SYMBOL, BIND, CHECK, NEXT)]


def test_query_template_program_binds_once_checks_once(tutorial_books):
    unit, _ = tutorial_books
    stmts = slice_statements(unit, 5, 6)
    t = derive_template(unit, stmts, mode="strict")
    p = compile_template(t)
    validate_program(p)
    symbols = [s.name for s in p.steps if s.op == SYMBOL]
    assert symbols == ["mysql_query"]
    # the class shared between the two statements binds once, checks once
    shared = [n.leaf_role.class_id for n in t.iter_preorder()
              if isinstance(n.leaf_role, VarWildcard)]
    shared_class = next(c for c in shared if shared.count(c) == 2)
    binds = [s for s in p.steps if s.op == BIND and s.class_id == shared_class]
    checks = [s for s in p.steps if s.op == CHECK and s.class_id == shared_class]
    assert (len(binds), len(checks)) == (1, 1)
    # bind happens in the first statement, check in the second
    assert p.steps.index(binds[0]) < p.steps.index(checks[0])


def test_trivial_call_program_has_no_var_steps():
    _, _, p = compile_from("<?php foo();")
    assert semantic_ops(p) == [KIND, KIND, SYMBOL, KIND]
    kinds = [s.kind for s in p.steps if s.op == KIND]
    assert kinds == [astree.CALL, astree.NAME, astree.ARG_LIST]
    assert not [s for s in p.steps if s.op in (BIND, CHECK)]


def test_step_counts_match_independent_walk():
    # oracle: count template features by an independent recursive walk, then
    # compare against the emitted opcode mix
    rng = random.Random(31)
    for _ in range(100):
        unit, t, p = compile_from(render_file(render_snippet(random_snippet(rng))),
                                  symbol_policy=rng.choice(("preserve", "wildcard")))
        nodes = name_leaves = var_leaves = 0

        def walk(nid):
            nonlocal nodes, name_leaves, var_leaves
            n = t.nodes[nid]
            nodes += 1
            if isinstance(n.leaf_role, ApiSymbol):
                name_leaves += 1
            if isinstance(n.leaf_role, VarWildcard):
                var_leaves += 1
            for c in n.children:
                walk(c)

        for r in t.statements:
            walk(r)
        counts = p.step_counts()
        # filter/bind/check/next steps follow the template feature counts;
        # explicit navigation adds one descend+ascend pair per non-root node
        assert len(semantic_ops(p)) == nodes + name_leaves + var_leaves + \
            (len(t.statements) - 1)
        assert counts[KIND] == nodes
        assert counts.get(SYMBOL, 0) == name_leaves
        assert counts.get(BIND, 0) + counts.get(CHECK, 0) == var_leaves
        assert counts.get(NEXT, 0) == len(t.statements) - 1
        assert counts.get(DESCEND, 0) == counts.get(ASCEND, 0) == \
            nodes - len(t.statements)
        validate_program(p)


def test_wildcard_policy_emits_no_symbol_steps():
    _, _, p = compile_from("<?php $r = mysql_query($q);",
                           symbol_policy="wildcard")
    assert not [s for s in p.steps if s.op == SYMBOL]


def test_compile_is_deterministic_and_content_addressed(tutorial_books, tmp_path):
    unit, text = tutorial_books
    stmts = slice_statements(unit, 5, 6)
    t1 = derive_template(unit, stmts, mode="strict")
    t2 = derive_template(unit, stmts, mode="strict")
    p1, p2 = compile_template(t1), compile_template(t2)
    assert p1 == p2
    assert p1.query_id == query_id_of(t1)
    # the same seed text parsed from another path compiles to the same id
    unit_b = parse_source(text, path="copied/elsewhere.php")
    t3 = derive_template(unit_b, slice_statements(unit_b, 5, 6), mode="strict")
    assert compile_template(t3).query_id == p1.query_id


def test_self_match(tutorial_books):
    rng = random.Random(7)
    unit, _ = tutorial_books
    stmts = slice_statements(unit, 5, 6)
    t = derive_template(unit, stmts, mode="strict")
    p = compile_template(t)
    matches, _ = scan_unit(p, unit)
    assert any(m.line_start == 5 and m.line_end == 6 for m in matches)
    # and over random snippets: the compiled program always finds its seed
    for _ in range(25):
        text = render_file(render_snippet(random_snippet(rng)))
        u = parse_source(text)
        tt = derive_template(u, u.children_of(u.nodes[u.root]))
        ms, _ = scan_unit(compile_template(tt), u)
        assert any(m.stmt_list_id == u.root and m.start_index == 0 for m in ms)


def test_self_match_bindings_are_identity(tutorial_books):
    unit, _ = tutorial_books
    stmts = slice_statements(unit, 5, 6)
    t = derive_template(unit, stmts)
    p = compile_template(t)
    matches, _ = scan_unit(p, unit)
    m = next(m for m in matches if m.line_start == 5)
    assert m.bindings == {0: "$title", 1: "$_POST", 2: "$result"}


def test_traversal_script_shape(tutorial_books):
    unit, _ = tutorial_books
    t = derive_template(unit, slice_statements(unit, 5, 6), mode="strict")
    p = compile_template(t)
    script = export_traversal_script(p)
    lines = script.strip().splitlines()
    assert len(lines) == len(p.steps)
    # remembering a variable is a sideEffect; re-checking it is a filter
    assert any(ln.startswith(".sideEffect{ var_0") for ln in lines)
    assert ".filter{ it.code == var_0 }" in lines
    assert ".filter{ it.code == 'mysql_query' }" in lines
    assert ".nextStatement()" in lines
    bind_line = next(i for i, ln in enumerate(lines) if "sideEffect{ var_0" in ln)
    check_line = next(i for i, ln in enumerate(lines) if ln == ".filter{ it.code == var_0 }")
    assert bind_line < check_line


def test_script_without_variables_has_no_side_effects():
    _, _, p = compile_from("<?php foo();")
    script = export_traversal_script(p)
    assert "sideEffect" not in script
    assert len(script.strip().splitlines()) == len(p.steps)


def test_program_serialization_roundtrip():
    rng = random.Random(61)
    for _ in range(20):
        _, _, p = compile_from(render_file(render_snippet(random_snippet(rng))))
        again = deserialize_program(serialize_program(p))
        assert again == p
