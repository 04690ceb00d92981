from __future__ import annotations

import pytest

from analogue import astree
from analogue.astree import AmbiguousSlice, EmptySlice, slice_statements
from analogue.php_parser import parse_source


def test_vulnerable_slice_of_search_tutorial(tutorial_search):
    unit, _ = tutorial_search
    stmts = slice_statements(unit, 4, 6)
    assert [(s.kind, s.line_start, s.line_end) for s in stmts] == [
        (astree.ASSIGN, 4, 4), (astree.ASSIGN, 5, 6)]


def test_sqli_and_xss_slices(tutorial_books):
    unit, _ = tutorial_books
    sqli = slice_statements(unit, 5, 6)
    assert [s.line_start for s in sqli] == [5, 6]
    assert all(s.kind == astree.ASSIGN for s in sqli)
    xss = slice_statements(unit, 11, 12)
    assert [s.line_start for s in xss] == [11, 12]
    assert all(s.kind == astree.ECHO for s in xss)


def test_full_range_equals_all_top_level_statements(tutorial_books):
    unit, _ = tutorial_books
    stmts = slice_statements(unit, 1, 16)
    assert [s.id for s in stmts] == list(unit.nodes[unit.root].children)


def test_control_structure_counts_as_one_statement(tutorial_books):
    # lines 9..14 cover the whole while loop: the slice is the loop itself,
    # not its body statements
    unit, _ = tutorial_books
    stmts = slice_statements(unit, 9, 14)
    assert len(stmts) == 1
    assert stmts[0].kind == astree.WHILE


def test_empty_slice_raises(tutorial_books):
    unit, _ = tutorial_books
    with pytest.raises(EmptySlice):
        slice_statements(unit, 4, 4)  # a blank line


def test_ambiguous_slice_across_blocks():
    unit = parse_source("""<?php
if ($a) {
    echo 1;
}
echo 2;
""")
    # line 3 is inside the if body, line 5 is top-level: two distinct blocks
    with pytest.raises(AmbiguousSlice):
        slice_statements(unit, 3, 5)


def test_partial_statement_not_included(tutorial_search):
    # line 5 alone covers only half of the two-line query statement
    unit, _ = tutorial_search
    with pytest.raises(EmptySlice):
        slice_statements(unit, 5, 5)


def test_bad_range_rejected(tutorial_books):
    unit, _ = tutorial_books
    with pytest.raises(ValueError):
        slice_statements(unit, 6, 5)
