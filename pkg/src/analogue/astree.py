"""Normalized syntax trees for PHP source files.

Node kinds are plain strings.  The canonical kinds below cover the parsed
subset; ``BinOp`` kinds carry their operator as ``BinOp:<op>`` and any other
string (``Other:foo``, or an unknown kind from an imported stream) acts as an
opaque tag that only ever participates in exact kind equality.
"""
from __future__ import annotations

from dataclasses import dataclass

STMT_LIST = "StmtList"
ASSIGN = "Assign"
CALL = "Call"
ARG_LIST = "ArgList"
ARRAY_DIM = "ArrayDim"
VAR = "Var"
NAME = "Name"
LITERAL = "Literal"
ENCAPSED = "Encapsed"
ECHO = "Echo"
IF = "If"
WHILE = "While"
FOREACH = "Foreach"
RETURN = "Return"
HTML = "Html"
OTHER = "Other"

CONCAT = "BinOp:concat"

CANONICAL_KINDS = frozenset({
    STMT_LIST, ASSIGN, CALL, ARG_LIST, ARRAY_DIM, VAR, NAME, LITERAL,
    ENCAPSED, ECHO, IF, WHILE, FOREACH, RETURN, HTML, OTHER,
})


def binop(op: str) -> str:
    return "BinOp:" + op


def other(tag: str) -> str:
    return "Other:" + tag if tag else OTHER


def is_binop(kind: str) -> bool:
    return kind.startswith("BinOp:")


class InvariantError(Exception):
    """A SourceUnit violates a structural invariant."""


class EmptySlice(Exception):
    """No statement lies entirely within the requested line range."""


class AmbiguousSlice(Exception):
    """The requested line range selects statements from more than one block."""


@dataclass
class AstNode:
    id: int
    kind: str
    children: tuple[int, ...] = ()
    symbol: str | None = None      # identifier for Var, callee/const name for Name
    value: str | None = None       # raw literal content for Literal
    line_start: int = 1
    line_end: int = 1
    depth: int = 0


@dataclass
class SourceUnit:
    path: str
    root: int
    nodes: dict[int, AstNode]
    node_count: int = 0
    max_depth: int = 0

    def node(self, node_id: int) -> AstNode:
        return self.nodes[node_id]

    def children_of(self, n: AstNode) -> list[AstNode]:
        return [self.nodes[c] for c in n.children]

    def parent_map(self) -> dict[int, int]:
        parents: dict[int, int] = {}
        for n in self.nodes.values():
            for c in n.children:
                parents[c] = n.id
        return parents

    def iter_preorder(self):
        """Yield nodes in document order (root first, children left to right)."""
        stack = [self.root]
        while stack:
            n = self.nodes[stack.pop()]
            yield n
            stack.extend(reversed(n.children))

    def stmt_lists(self) -> list[AstNode]:
        return [n for n in self.iter_preorder() if n.kind == STMT_LIST]


def compute_depths(unit: SourceUnit) -> SourceUnit:
    """Populate every node's depth (root = 0) and the unit's max_depth."""
    max_depth = 0
    stack = [(unit.root, 0)]
    while stack:
        node_id, d = stack.pop()
        n = unit.nodes[node_id]
        n.depth = d
        if d > max_depth:
            max_depth = d
        for c in n.children:
            stack.append((c, d + 1))
    unit.max_depth = max_depth
    return unit


def validate_unit(unit: SourceUnit) -> None:
    """Check tree shape, line spans and symbol/value placement.

    Raises InvariantError with the offending node id.  Symbol/value rules are
    enforced for canonical kinds only; tagged kinds from external frontends
    may carry either field and keep it verbatim.
    """
    if unit.root not in unit.nodes:
        raise InvariantError("root id %d not present" % unit.root)
    if unit.nodes[unit.root].kind != STMT_LIST:
        raise InvariantError("root must be a StmtList")
    seen: set[int] = set()
    stack = [unit.root]
    while stack:
        node_id = stack.pop()
        if node_id in seen:
            raise InvariantError("node %d has multiple parents or a cycle" % node_id)
        seen.add(node_id)
        n = unit.nodes.get(node_id)
        if n is None:
            raise InvariantError("dangling child reference %d" % node_id)
        if n.line_start > n.line_end:
            raise InvariantError("node %d has inverted line span" % node_id)
        for c in n.children:
            child = unit.nodes.get(c)
            if child is None:
                raise InvariantError("dangling child reference %d in node %d" % (c, node_id))
            if child.line_start < n.line_start or child.line_end > n.line_end:
                raise InvariantError(
                    "child %d span escapes parent %d span" % (c, node_id))
            stack.append(c)
        if n.kind in (VAR, NAME):
            if n.symbol is None:
                raise InvariantError("node %d (%s) lacks a symbol" % (node_id, n.kind))
        elif n.kind == LITERAL:
            if n.value is None:
                raise InvariantError("Literal node %d lacks a value" % node_id)
        elif n.kind in CANONICAL_KINDS or is_binop(n.kind):
            if n.symbol is not None or n.value is not None:
                raise InvariantError("node %d (%s) carries symbol/value" % (node_id, n.kind))
    if len(seen) != len(unit.nodes):
        stray = sorted(set(unit.nodes) - seen)
        raise InvariantError("unreachable nodes: %s" % stray[:5])
    if unit.node_count != len(seen):
        raise InvariantError("node_count %d != reachable %d" % (unit.node_count, len(seen)))


def structurally_equal(a: SourceUnit, b: SourceUnit, include_lines: bool = True) -> bool:
    """Node-for-node tree equality: kind, symbol, value, child order (ids may differ)."""

    def eq(na: AstNode, nb: AstNode) -> bool:
        if (na.kind, na.symbol, na.value) != (nb.kind, nb.symbol, nb.value):
            return False
        if include_lines and (na.line_start, na.line_end) != (nb.line_start, nb.line_end):
            return False
        if len(na.children) != len(nb.children):
            return False
        return all(eq(a.nodes[ca], b.nodes[cb])
                   for ca, cb in zip(na.children, nb.children))

    return eq(a.nodes[a.root], b.nodes[b.root])


class TreeBuilder:
    """Incremental construction of a SourceUnit with dense ids."""

    def __init__(self) -> None:
        self._nodes: dict[int, AstNode] = {}
        self._next = 0

    def add(self, kind: str, children: list[int] | tuple[int, ...] = (),
            symbol: str | None = None, value: str | None = None,
            line_start: int = 1, line_end: int | None = None) -> int:
        node_id = self._next
        self._next += 1
        self._nodes[node_id] = AstNode(
            id=node_id, kind=kind, children=tuple(children),
            symbol=symbol, value=value,
            line_start=line_start,
            line_end=line_end if line_end is not None else line_start)
        return node_id

    def mark(self) -> int:
        return self._next

    def rollback(self, mark: int) -> None:
        """Discard nodes created since mark (parse error recovery)."""
        for node_id in range(mark, self._next):
            self._nodes.pop(node_id, None)
        self._next = mark

    def span_from_children(self, node_id: int) -> None:
        n = self._nodes[node_id]
        if not n.children:
            return
        n.line_start = min(n.line_start, *(self._nodes[c].line_start for c in n.children))
        n.line_end = max(n.line_end, *(self._nodes[c].line_end for c in n.children))

    def finish(self, path: str, root: int) -> SourceUnit:
        unit = SourceUnit(path=path, root=root, nodes=self._nodes,
                          node_count=len(self._nodes))
        compute_depths(unit)
        return unit


def statement_parent_index(unit: SourceUnit) -> dict[int, tuple[int, int]]:
    """Map statement node id -> (owning StmtList id, index among siblings)."""
    out: dict[int, tuple[int, int]] = {}
    for sl in unit.stmt_lists():
        for i, c in enumerate(sl.children):
            out[c] = (sl.id, i)
    return out


def slice_statements(unit: SourceUnit, first_line: int, last_line: int) -> list[AstNode]:
    """Select the run of sibling statements lying entirely in [first_line, last_line].

    Only outermost contained statements count: a control structure whose whole
    span fits is one statement, its body is not considered separately.
    """
    if first_line > last_line:
        raise ValueError("first_line must not exceed last_line")
    stmt_index = statement_parent_index(unit)
    contained = [unit.nodes[sid] for sid in stmt_index
                 if unit.nodes[sid].line_start >= first_line
                 and unit.nodes[sid].line_end <= last_line]
    if not contained:
        raise EmptySlice("no statement fully inside lines %d..%d" % (first_line, last_line))
    # Drop statements nested inside another contained statement.
    contained_ids = {n.id for n in contained}

    def has_contained_ancestor(node_id: int) -> bool:
        parents = parent_cache
        cur = parents.get(node_id)
        while cur is not None:
            if cur in contained_ids:
                return True
            cur = parents.get(cur)
        return False

    parent_cache = unit.parent_map()
    outer = [n for n in contained if not has_contained_ancestor(n.id)]
    parents = {stmt_index[n.id][0] for n in outer}
    if len(parents) > 1:
        raise AmbiguousSlice(
            "lines %d..%d select statements from %d distinct blocks"
            % (first_line, last_line, len(parents)))
    outer.sort(key=lambda n: stmt_index[n.id][1])
    indices = [stmt_index[n.id][1] for n in outer]
    if indices != list(range(indices[0], indices[0] + len(indices))):
        raise AmbiguousSlice("selected statements are not consecutive siblings")
    return outer
