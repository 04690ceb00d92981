"""Tokenizer and recursive-descent parser for a pragmatic PHP subset.

Covers the constructs that matter for snippet matching: assignments, calls,
echo, array indexing, superglobals, single/double-quoted strings with
interpolation, concatenation, if/while/foreach, return and inline HTML.
Anything else is represented as a tagged ``Other:*`` node with best-effort
children, so files never need full-language support to be scannable.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import astree
from .astree import TreeBuilder, SourceUnit


class LexError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__("%s (line %d)" % (message, line))
        self.line = line


class ParseError(Exception):
    def __init__(self, message: str, line: int):
        super().__init__("%s (line %d)" % (message, line))
        self.line = line


@dataclass
class Token:
    type: str            # html | var | ident | number | sq | dq | op | eof
    value: str
    line: int
    line_end: int
    heredoc: bool = False


_OPS3 = ("===", "!==", "<=>", "**=", "<<=", ">>=", "??=", "...")
_OPS2 = ("==", "!=", "<>", "<=", ">=", "&&", "||", "++", "--", "+=", "-=",
         "*=", "/=", ".=", "%=", "->", "=>", "::", "<<", ">>", "**", "??",
         "|=", "&=", "^=")
_OPS1 = "=.+-*/%!<>()[]{},;:?@&|^~\\$"

_CASTS = frozenset({"int", "integer", "bool", "boolean", "float", "double",
                    "real", "string", "array", "object", "unset", "binary"})


def _is_ident_start(ch: str) -> bool:
    return ch.isalpha() or ch == "_" or ord(ch) > 0x7f


def _is_ident_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_" or ord(ch) > 0x7f


def tokenize(text: str) -> list[Token]:
    """Split a whole file into tokens; content outside <?php ... ?> becomes html tokens."""
    toks: list[Token] = []
    i, line, n = 0, 1, len(text)
    while i < n:
        m = text.find("<?", i)
        if m == -1:
            m = n
        if m > i:
            seg = text[i:m]
            toks.append(Token("html", seg, line, line + seg.count("\n")))
            line += seg.count("\n")
            i = m
        if i >= n:
            break
        if text.startswith("<?php", i):
            i += 5
        elif text.startswith("<?=", i):
            toks.append(Token("ident", "echo", line, line))
            i += 3
        else:
            i += 2
        i, line = _lex_php(text, i, line, toks)
    return toks


def lex_fragment(fragment: str, start_line: int) -> list[Token]:
    """Tokenize an expression fragment (already inside PHP mode)."""
    toks: list[Token] = []
    _lex_php(fragment, 0, start_line, toks)
    return toks


def _lex_php(text: str, i: int, line: int, toks: list[Token]) -> tuple[int, int]:
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            i += 1
            continue
        if ch in " \t\r\v\f":
            i += 1
            continue
        if text.startswith("?>", i):
            toks.append(Token("op", "?>", line, line))
            i += 2
            if i < n and text[i] == "\n":  # PHP swallows one newline after ?>
                i += 1
                line += 1
            return i, line
        if text.startswith("//", i) or ch == "#":
            j = i + 2 if ch == "/" else i + 1
            while j < n and text[j] != "\n" and not text.startswith("?>", j):
                j += 1
            i = j  # line comments end at newline or at a closing tag
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end == -1:
                raise LexError("unterminated block comment", line)
            line += text.count("\n", i, end + 2)
            i = end + 2
            continue
        if ch == "$":
            j = i + 1
            if j < n and _is_ident_start(text[j]):
                k = j + 1
                while k < n and _is_ident_char(text[k]):
                    k += 1
                toks.append(Token("var", text[i:k], line, line))
                i = k
                continue
            toks.append(Token("op", "$", line, line))
            i += 1
            continue
        if _is_ident_start(ch):
            k = i + 1
            while k < n and _is_ident_char(text[k]):
                k += 1
            toks.append(Token("ident", text[i:k], line, line))
            i = k
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            k = i
            if text.startswith("0x", i) or text.startswith("0X", i):
                k = i + 2
                while k < n and (text[k] in "abcdefABCDEF_" or text[k].isdigit()):
                    k += 1
            else:
                seen_dot = seen_exp = False
                while k < n:
                    c = text[k]
                    if c.isdigit() or c == "_":
                        k += 1
                    elif c == "." and not seen_dot and not seen_exp:
                        seen_dot = True
                        k += 1
                    elif c in "eE" and not seen_exp and k + 1 < n and (
                            text[k + 1].isdigit() or text[k + 1] in "+-"):
                        seen_exp = True
                        k += 2 if text[k + 1] in "+-" else 1
                    else:
                        break
            toks.append(Token("number", text[i:k], line, line))
            i = k
            continue
        if ch == "'":
            j, ln = i + 1, line
            buf = []
            while j < n:
                c = text[j]
                if c == "\\" and j + 1 < n:
                    buf.append(text[j:j + 2])
                    if text[j + 1] == "\n":
                        ln += 1
                    j += 2
                    continue
                if c == "'":
                    break
                if c == "\n":
                    ln += 1
                buf.append(c)
                j += 1
            if j >= n:
                raise LexError("unterminated single-quoted string", line)
            toks.append(Token("sq", "".join(buf), line, ln))
            i = j + 1
            line = ln
            continue
        if ch == '"':
            j, ln = i + 1, line
            while j < n:
                c = text[j]
                if c == "\\" and j + 1 < n:
                    if text[j + 1] == "\n":
                        ln += 1
                    j += 2
                    continue
                if c == '"':
                    break
                if c == "\n":
                    ln += 1
                j += 1
            if j >= n:
                raise LexError("unterminated double-quoted string", line)
            toks.append(Token("dq", text[i + 1:j], line, ln))
            i = j + 1
            line = ln
            continue
        if text.startswith("<<<", i):
            i, line = _lex_heredoc(text, i, line, toks)
            continue
        if text.startswith(_OPS3, i):
            toks.append(Token("op", text[i:i + 3], line, line))
            i += 3
            continue
        two = text[i:i + 2]
        if two in _OPS2:
            toks.append(Token("op", two, line, line))
            i += 2
            continue
        if ch in _OPS1:
            toks.append(Token("op", ch, line, line))
            i += 1
            continue
        raise LexError("unexpected character %r" % ch, line)
    return i, line


def _lex_heredoc(text: str, i: int, line: int, toks: list[Token]) -> tuple[int, int]:
    n = len(text)
    j = i + 3
    while j < n and text[j] in " \t":
        j += 1
    nowdoc = False
    quote = ""
    if j < n and text[j] in "'\"":
        nowdoc = text[j] == "'"
        quote = text[j]
        j += 1
    k = j
    while k < n and _is_ident_char(text[k]):
        k += 1
    label = text[j:k]
    if not label:
        raise LexError("malformed heredoc start", line)
    if quote:
        if k >= n or text[k] != quote:
            raise LexError("malformed heredoc start", line)
        k += 1
    nl = text.find("\n", k)
    if nl == -1:
        raise LexError("unterminated heredoc", line)
    body_start = nl + 1
    pos = body_start
    ln = line + 1
    while pos <= n:
        eol = text.find("\n", pos)
        if eol == -1:
            eol = n
        raw_line = text[pos:eol]
        stripped = raw_line.lstrip(" \t")
        after = stripped[len(label):]
        if stripped.startswith(label) and (not after or not _is_ident_char(after[0])):
            body = text[body_start:pos]
            if body.endswith("\n"):
                body = body[:-1]
            toks.append(Token("sq" if nowdoc else "dq", body,
                              line, max(line, ln - 1), heredoc=True))
            indent = len(raw_line) - len(stripped)
            # resume lexing right after the terminator label
            return pos + indent + len(label), ln
        if eol == n:
            break
        pos = eol + 1
        ln += 1
    raise LexError("unterminated heredoc", line)


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_KEYWORDS = frozenset({
    "echo", "print", "if", "elseif", "else", "while", "foreach", "for",
    "return", "function", "class", "interface", "trait", "abstract", "final",
    "global", "include", "include_once", "require", "require_once", "switch",
    "do", "break", "continue", "try", "throw", "namespace", "use", "enum",
    "endif", "endwhile", "endforeach", "endfor", "endswitch",
})

_BIN_PREC = {
    "??": 1,
    "||": 2, "&&": 3,
    "|": 4, "^": 5, "&": 6,
    "==": 7, "!=": 7, "===": 7, "!==": 7, "<>": 7,
    "<": 8, "<=": 8, ">": 8, ">=": 8, "<=>": 8,
    "<<": 9, ">>": 9,
    "+": 10, "-": 10, ".": 10,
    "*": 11, "/": 11, "%": 11,
    "**": 12,
    "instanceof": 8,
}

_EOF = Token("eof", "", 0, 0)


class _Parser:
    def __init__(self, toks: list[Token], builder: TreeBuilder):
        self.toks = toks
        self.pos = 0
        self.b = builder

    # -- token plumbing ----------------------------------------------------
    def peek(self, ahead: int = 0) -> Token:
        idx = self.pos + ahead
        return self.toks[idx] if idx < len(self.toks) else _EOF

    def next(self) -> Token:
        t = self.peek()
        self.pos += 1
        return t

    def at_op(self, *vals: str) -> bool:
        t = self.peek()
        return t.type == "op" and t.value in vals

    def at_kw(self, *words: str) -> bool:
        t = self.peek()
        return t.type == "ident" and t.value.lower() in words

    def expect_op(self, val: str) -> Token:
        t = self.peek()
        if t.type != "op" or t.value != val:
            raise ParseError("expected %r, found %r" % (val, t.value or t.type),
                             t.line or self._last_line())
        return self.next()

    def _last_line(self) -> int:
        return self.toks[-1].line_end if self.toks else 1

    # -- statements --------------------------------------------------------
    def parse_statements_until(self, closers: tuple[str, ...],
                               kw_closers: tuple[str, ...] = ()) -> list[int]:
        out: list[int] = []
        while True:
            t = self.peek()
            if t.type == "eof":
                break
            if t.type == "op" and t.value in closers:
                break
            if kw_closers and t.type == "ident" and t.value.lower() in kw_closers:
                break
            if t.type == "op" and t.value == "?>":
                self.next()
                continue
            if t.type == "op" and t.value == ";":
                self.next()
                continue
            if t.type == "html":
                self.next()
                out.append(self.b.add(astree.HTML, line_start=t.line, line_end=t.line_end))
                continue
            start_pos = self.pos
            node_mark = self.b.mark()
            try:
                sid = self.parse_statement()
            except ParseError:
                self.pos = start_pos
                self.b.rollback(node_mark)
                sid = self._recover_statement()
            if sid is not None:
                out.append(sid)
        return out

    def _recover_statement(self) -> int | None:
        """Swallow a malformed statement: skip to ';' at bracket depth 0."""
        t0 = self.peek()
        depth = 0
        last = t0
        progressed = False
        while True:
            t = self.peek()
            if t.type == "eof":
                if depth > 0:
                    raise ParseError("unbalanced delimiters", last.line_end)
                break
            if t.type == "op":
                if t.value in "([{":
                    depth += 1
                elif t.value in ")]}":
                    if depth == 0:
                        if not progressed:
                            raise ParseError("unexpected %r" % t.value, t.line)
                        break
                    depth -= 1
                elif t.value == ";" and depth == 0:
                    last = self.next()
                    progressed = True
                    break
                elif t.value == "?>" and depth == 0:
                    break
            last = self.next()
            progressed = True
        if not progressed:
            return None
        return self.b.add(astree.other("opaque"), line_start=t0.line, line_end=last.line_end)

    def parse_statement(self) -> int | None:
        t = self.peek()
        if t.type == "ident":
            kw = t.value.lower()
            if kw in _KEYWORDS:
                return self._parse_keyword_statement(kw)
        if t.type == "op" and t.value == "{":
            self.next()
            stmts = self.parse_statements_until(("}",))
            close = self.expect_op("}")
            sl = self.b.add(astree.STMT_LIST, stmts, line_start=t.line, line_end=close.line_end)
            self.b.span_from_children(sl)
            return sl
        expr = self.parse_expr()
        self._finish_simple_statement(expr)
        return expr

    def _finish_simple_statement(self, node_id: int) -> None:
        if self.at_op(";"):
            semi = self.next()
            n = self.b._nodes[node_id]
            if semi.line_end > n.line_end:
                n.line_end = semi.line_end
        elif self.at_op("?>") or self.peek().type == "eof":
            pass
        else:
            t = self.peek()
            raise ParseError("expected ';' after statement", t.line or self._last_line())

    def _parse_keyword_statement(self, kw: str) -> int | None:
        t = self.next()
        if kw == "echo":
            exprs = [self.parse_expr()]
            while self.at_op(","):
                self.next()
                exprs.append(self.parse_expr())
            node = self.b.add(astree.ECHO, exprs, line_start=t.line, line_end=t.line_end)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw == "print":
            expr = self.parse_expr()
            node = self.b.add(astree.other("print"), [expr], line_start=t.line)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw == "if":
            return self._parse_if(t)
        if kw in ("endif", "endwhile", "endforeach", "endfor", "endswitch"):
            raise ParseError("'%s' without matching block" % kw, t.line)
        if kw == "while":
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            body, end_line = self._parse_block("endwhile")
            node = self.b.add(astree.WHILE, [cond, body], line_start=t.line, line_end=end_line)
            self.b.span_from_children(node)
            return node
        if kw == "foreach":
            return self._parse_foreach(t)
        if kw == "for":
            return self._parse_for(t)
        if kw == "return":
            children = []
            if not (self.at_op(";") or self.at_op("?>") or self.peek().type == "eof"):
                children.append(self.parse_expr())
            node = self.b.add(astree.RETURN, children, line_start=t.line, line_end=t.line_end)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw == "function":
            return self._parse_function(t)
        if kw in ("class", "interface", "trait", "enum", "abstract", "final"):
            return self._parse_classlike(t, kw)
        if kw == "global":
            children = []
            while self.peek().type == "var":
                v = self.next()
                children.append(self.b.add(astree.VAR, symbol=v.value, line_start=v.line))
                if self.at_op(","):
                    self.next()
            node = self.b.add(astree.other("global"), children, line_start=t.line, line_end=t.line_end)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw in ("include", "include_once", "require", "require_once"):
            expr = self.parse_expr()
            node = self.b.add(astree.other(kw), [expr], line_start=t.line)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw == "switch":
            self.expect_op("(")
            cond = self.parse_expr()
            self.expect_op(")")
            end_line = self._skip_balanced_braces()
            node = self.b.add(astree.other("switch"), [cond], line_start=t.line, line_end=end_line)
            return node
        if kw == "do":
            body, _ = self._parse_block(None)
            if not self.at_kw("while"):
                raise ParseError("expected 'while' after do block", self.peek().line)
            self.next()
            self.expect_op("(")
            cond = self.parse_expr()
            close = self.expect_op(")")
            node = self.b.add(astree.other("do"), [body, cond],
                              line_start=t.line, line_end=close.line_end)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw in ("break", "continue"):
            if self.peek().type == "number":
                self.next()
            node = self.b.add(astree.other(kw), line_start=t.line, line_end=t.line_end)
            self._finish_simple_statement(node)
            return node
        if kw == "try":
            end_line = self._skip_balanced_braces()
            while self.at_kw("catch", "finally"):
                self.next()
                if self.at_op("("):
                    self._skip_balanced_parens()
                end_line = self._skip_balanced_braces()
            return self.b.add(astree.other("try"), line_start=t.line, line_end=end_line)
        if kw == "throw":
            expr = self.parse_expr()
            node = self.b.add(astree.other("throw"), [expr], line_start=t.line)
            self.b.span_from_children(node)
            self._finish_simple_statement(node)
            return node
        if kw in ("namespace", "use"):
            last = t
            while not (self.at_op(";") or self.at_op("?>") or self.peek().type == "eof"):
                if self.at_op("{"):
                    end_line = self._skip_balanced_braces()
                    return self.b.add(astree.other(kw), line_start=t.line, line_end=end_line)
                last = self.next()
            if self.at_op(";"):
                last = self.next()
            return self.b.add(astree.other(kw), line_start=t.line, line_end=last.line_end)
        if kw in ("elseif", "else"):
            raise ParseError("'%s' without matching if" % kw, t.line)
        raise ParseError("unhandled keyword %r" % kw, t.line)

    def _parse_if(self, t: Token) -> int:
        self.expect_op("(")
        cond = self.parse_expr()
        self.expect_op(")")
        then_sl, end_line = self._parse_block("endif", alt_closers=("elseif", "else"))
        children = [cond, then_sl]
        if self.at_kw("elseif"):
            kw_tok = self.peek()
            self.next()
            nested = self._parse_if(kw_tok)
            else_sl = self.b.add(astree.STMT_LIST, [nested],
                                 line_start=kw_tok.line)
            self.b.span_from_children(else_sl)
            children.append(else_sl)
        elif self.at_kw("else"):
            self.next()
            if self.at_kw("if"):
                kw_tok = self.peek()
                self.next()
                nested = self._parse_if(kw_tok)
                else_sl = self.b.add(astree.STMT_LIST, [nested], line_start=kw_tok.line)
                self.b.span_from_children(else_sl)
            else:
                else_sl, end_line = self._parse_block("endif")
            children.append(else_sl)
        node = self.b.add(astree.IF, children, line_start=t.line, line_end=end_line)
        self.b.span_from_children(node)
        return node

    def _parse_foreach(self, t: Token) -> int:
        self.expect_op("(")
        iterable = self.parse_expr()
        if not self.at_kw("as"):
            raise ParseError("expected 'as' in foreach", self.peek().line)
        self.next()
        if self.at_op("&"):
            self.next()
        first = self.parse_expr()
        key = None
        value = first
        if self.at_op("=>"):
            self.next()
            if self.at_op("&"):
                self.next()
            key = first
            value = self.parse_expr()
        self.expect_op(")")
        body, end_line = self._parse_block("endforeach")
        children = [iterable] + ([key] if key is not None else []) + [value, body]
        node = self.b.add(astree.FOREACH, children, line_start=t.line, line_end=end_line)
        self.b.span_from_children(node)
        return node

    def _parse_for(self, t: Token) -> int:
        self.expect_op("(")
        children = []
        for part in range(3):
            if not self.at_op(";") and not self.at_op(")"):
                children.append(self.parse_expr())
                while self.at_op(","):
                    self.next()
                    children.append(self.parse_expr())
            if part < 2:
                self.expect_op(";")
        self.expect_op(")")
        body, end_line = self._parse_block("endfor")
        children.append(body)
        node = self.b.add(astree.other("for"), children, line_start=t.line, line_end=end_line)
        self.b.span_from_children(node)
        return node

    def _parse_block(self, alt_end: str | None,
                     alt_closers: tuple[str, ...] = ()) -> tuple[int, int]:
        """Parse a {...} block, an alternative ':' block, or a single statement.

        Returns (StmtList id, end line).
        """
        if self.at_op("{"):
            open_tok = self.next()
            stmts = self.parse_statements_until(("}",))
            close = self.expect_op("}")
            sl = self.b.add(astree.STMT_LIST, stmts,
                            line_start=open_tok.line, line_end=close.line_end)
            return sl, close.line_end
        if self.at_op(":") and alt_end is not None:
            open_tok = self.next()
            kw_stops = (alt_end,) + tuple(alt_closers)
            stmts = self.parse_statements_until((), kw_closers=kw_stops)
            t = self.peek()
            if t.type == "eof":
                raise ParseError("unterminated '%s' block" % alt_end, open_tok.line)
            end_line = t.line
            if self.at_kw(alt_end):
                self.next()
                if self.at_op(";"):
                    end_line = self.next().line_end
            sl = self.b.add(astree.STMT_LIST, stmts,
                            line_start=open_tok.line, line_end=end_line)
            self.b.span_from_children(sl)
            return sl, end_line
        if self.at_op(";"):
            semi = self.next()
            sl = self.b.add(astree.STMT_LIST, [],
                            line_start=semi.line, line_end=semi.line_end)
            return sl, semi.line_end
        stmt = self.parse_statement()
        stmts = [stmt] if stmt is not None else []
        start = self.b._nodes[stmt].line_start if stmt is not None else self._last_line()
        sl = self.b.add(astree.STMT_LIST, stmts, line_start=start)
        self.b.span_from_children(sl)
        return sl, self.b._nodes[sl].line_end

    def _parse_function(self, t: Token) -> int:
        if self.peek().type == "ident" or self.at_op("&"):
            if self.at_op("&"):
                self.next()
            if self.peek().type == "ident":
                self.next()  # function name, not preserved
        self._skip_balanced_parens()
        while not self.at_op("{") and self.peek().type != "eof":
            if self.at_op(";"):  # abstract/interface signature
                semi = self.next()
                return self.b.add(astree.other("function"),
                                  line_start=t.line, line_end=semi.line_end)
            self.next()
        open_tok = self.expect_op("{")
        stmts = self.parse_statements_until(("}",))
        close = self.expect_op("}")
        body = self.b.add(astree.STMT_LIST, stmts,
                          line_start=open_tok.line, line_end=close.line_end)
        node = self.b.add(astree.other("function"), [body],
                          line_start=t.line, line_end=close.line_end)
        return node

    def _parse_classlike(self, t: Token, kw: str) -> int:
        while self.at_kw("abstract", "final", "readonly"):
            self.next()
        if self.at_kw("class", "interface", "trait", "enum"):
            self.next()
        if self.peek().type == "ident":
            self.next()  # class name
        while not self.at_op("{") and self.peek().type != "eof":
            self.next()  # extends/implements clause
        if self.peek().type == "eof":
            raise ParseError("unterminated class declaration", t.line)
        self.expect_op("{")
        members: list[int] = []
        end_line = t.line
        while True:
            tok = self.peek()
            if tok.type == "eof":
                raise ParseError("unbalanced class body", t.line)
            if tok.type == "op" and tok.value == "}":
                end_line = self.next().line_end
                break
            if tok.type == "ident" and tok.value.lower() in (
                    "public", "private", "protected", "static", "var",
                    "final", "abstract", "readonly"):
                self.next()
                continue
            if tok.type == "ident" and tok.value.lower() == "function":
                self.next()
                members.append(self._parse_function(tok))
                continue
            if tok.type == "ident" and tok.value.lower() in ("const", "use", "case"):
                while not self.at_op(";") and self.peek().type != "eof":
                    if self.at_op("{"):
                        self._skip_balanced_braces()
                        break
                    self.next()
                if self.at_op(";"):
                    self.next()
                continue
            if tok.type == "var":
                while not self.at_op(";") and self.peek().type != "eof":
                    self.next()
                if self.at_op(";"):
                    self.next()
                continue
            self.next()  # unknown member token, skip
        node = self.b.add(astree.other("class"), members, line_start=t.line, line_end=end_line)
        return node

    def _skip_balanced_parens(self) -> int:
        self.expect_op("(")
        depth = 1
        while depth:
            tok = self.next()
            if tok.type == "eof":
                raise ParseError("unbalanced parentheses", self._last_line())
            if tok.type == "op":
                if tok.value == "(":
                    depth += 1
                elif tok.value == ")":
                    depth -= 1
        return tok.line_end

    def _skip_balanced_braces(self) -> int:
        while not self.at_op("{"):
            if self.peek().type == "eof":
                raise ParseError("expected '{'", self._last_line())
            self.next()
        self.next()
        depth = 1
        while depth:
            tok = self.next()
            if tok.type == "eof":
                raise ParseError("unbalanced braces", self._last_line())
            if tok.type == "op":
                if tok.value == "{":
                    depth += 1
                elif tok.value == "}":
                    depth -= 1
        return tok.line_end

    # -- expressions -------------------------------------------------------
    def parse_expr(self) -> int:
        node = self._parse_assign()
        while self.at_kw("or", "and", "xor"):
            op = self.next()
            rhs = self._parse_assign()
            node = self._binnode(op.value.lower(), node, rhs)
        return node

    def _parse_assign(self) -> int:
        left = self._parse_ternary()
        if self.at_op("="):
            self.next()
            right = self._parse_assign()
            node = self.b.add(astree.ASSIGN, [left, right],
                              line_start=self.b._nodes[left].line_start)
            self.b.span_from_children(node)
            return node
        if self.at_op("+=", "-=", "*=", "/=", ".=", "%=", "**=", "??=", "|=", "&=", "^=", "<<=", ">>="):
            op = self.next()
            right = self._parse_assign()
            node = self.b.add("AugAssign:" + op.value, [left, right],
                              line_start=self.b._nodes[left].line_start)
            self.b.span_from_children(node)
            return node
        return left

    def _parse_ternary(self) -> int:
        cond = self._parse_binary(1)
        if self.at_op("?"):
            self.next()
            if self.at_op(":"):
                self.next()
                other_branch = self._parse_assign()
                node = self.b.add(astree.other("ternary"), [cond, other_branch],
                                  line_start=self.b._nodes[cond].line_start)
            else:
                then = self._parse_assign()
                self.expect_op(":")
                other_branch = self._parse_assign()
                node = self.b.add(astree.other("ternary"), [cond, then, other_branch],
                                  line_start=self.b._nodes[cond].line_start)
            self.b.span_from_children(node)
            return node
        return cond

    def _parse_binary(self, min_prec: int) -> int:
        left = self._parse_unary()
        while True:
            t = self.peek()
            op = None
            if t.type == "op" and t.value in _BIN_PREC:
                op = t.value
            elif t.type == "ident" and t.value.lower() == "instanceof":
                op = "instanceof"
            if op is None or _BIN_PREC[op] < min_prec:
                return left
            self.next()
            right = self._parse_binary(_BIN_PREC[op] + 1)
            left = self._binnode(op, left, right)

    def _binnode(self, op: str, left: int, right: int) -> int:
        kind = astree.CONCAT if op == "." else astree.binop(op)
        node = self.b.add(kind, [left, right],
                          line_start=self.b._nodes[left].line_start)
        self.b.span_from_children(node)
        return node

    def _parse_unary(self) -> int:
        t = self.peek()
        if t.type == "op" and t.value in ("!", "-", "+", "~", "++", "--"):
            self.next()
            operand = self._parse_unary()
            node = self.b.add("UnaryOp:" + t.value, [operand], line_start=t.line)
            self.b.span_from_children(node)
            return node
        if t.type == "op" and t.value in ("@", "&"):
            self.next()  # error-suppression and references are transparent
            return self._parse_unary()
        if t.type == "op" and t.value == "(":
            nxt, after = self.peek(1), self.peek(2)
            if (nxt.type == "ident" and nxt.value.lower() in _CASTS
                    and after.type == "op" and after.value == ")"):
                self.next()
                self.next()
                self.next()
                operand = self._parse_unary()
                node = self.b.add("Cast:" + nxt.value.lower(), [operand], line_start=t.line)
                self.b.span_from_children(node)
                return node
        if t.type == "ident" and t.value.lower() in ("new", "clone"):
            self.next()
            operand = self._parse_unary()
            node = self.b.add(astree.other(t.value.lower()), [operand], line_start=t.line)
            self.b.span_from_children(node)
            return node
        if t.type == "ident" and t.value.lower() == "print":
            self.next()
            operand = self.parse_expr()
            node = self.b.add(astree.other("print"), [operand], line_start=t.line)
            self.b.span_from_children(node)
            return node
        return self._parse_postfix()

    def _parse_postfix(self) -> int:
        node = self._parse_primary()
        while True:
            if self.at_op("("):
                args = self._parse_arglist()
                callee = self.b._nodes[node]
                kind = astree.CALL if callee.kind in (astree.NAME, astree.VAR) \
                    else astree.other("call")
                node = self.b.add(kind, [node, args], line_start=callee.line_start)
                self.b.span_from_children(node)
                continue
            if self.at_op("["):
                open_tok = self.next()
                if self.at_op("]"):
                    close = self.next()
                    idx = self.b.add(astree.other("empty_index"),
                                     line_start=open_tok.line, line_end=close.line_end)
                else:
                    idx = self.parse_expr()
                    close = self.expect_op("]")
                base = self.b._nodes[node]
                node = self.b.add(astree.ARRAY_DIM, [node, idx],
                                  line_start=base.line_start, line_end=close.line_end)
                self.b.span_from_children(node)
                continue
            if self.at_op("->", "::"):
                op = self.next()
                member_tok = self.peek()
                if member_tok.type == "ident":
                    self.next()
                    member = self.b.add(astree.NAME, symbol=member_tok.value,
                                        line_start=member_tok.line)
                elif member_tok.type == "var":
                    self.next()
                    member = self.b.add(astree.VAR, symbol=member_tok.value,
                                        line_start=member_tok.line)
                elif member_tok.type == "op" and member_tok.value == "{":
                    self.next()
                    member = self.parse_expr()
                    self.expect_op("}")
                else:
                    raise ParseError("expected member name after %r" % op.value,
                                     op.line)
                tag = "prop" if op.value == "->" else "static_prop"
                base = self.b._nodes[node]
                node = self.b.add(astree.other(tag), [node, member],
                                  line_start=base.line_start)
                self.b.span_from_children(node)
                continue
            if self.at_op("++", "--"):
                op = self.next()
                base = self.b._nodes[node]
                node = self.b.add("UnaryOp:post" + op.value, [node],
                                  line_start=base.line_start, line_end=op.line_end)
                self.b.span_from_children(node)
                continue
            return node

    def _parse_arglist(self) -> int:
        open_tok = self.expect_op("(")
        args: list[int] = []
        if not self.at_op(")"):
            while True:
                if self.at_op("..."):
                    spread_tok = self.next()
                    inner = self.parse_expr()
                    arg = self.b.add(astree.other("spread"), [inner],
                                     line_start=spread_tok.line)
                    self.b.span_from_children(arg)
                else:
                    arg = self.parse_expr()
                    if self.at_op("=>"):  # array(...) literals share this path
                        self.next()
                        val = self.parse_expr()
                        pair = self.b.add(astree.other("kv"), [arg, val],
                                          line_start=self.b._nodes[arg].line_start)
                        self.b.span_from_children(pair)
                        arg = pair
                args.append(arg)
                if self.at_op(","):
                    self.next()
                    if self.at_op(")"):
                        break
                    continue
                break
        close = self.expect_op(")")
        node = self.b.add(astree.ARG_LIST, args,
                          line_start=open_tok.line, line_end=close.line_end)
        return node

    def _parse_primary(self) -> int:
        t = self.peek()
        if t.type == "var":
            self.next()
            return self.b.add(astree.VAR, symbol=t.value, line_start=t.line)
        if t.type == "op" and t.value == "$":
            self.next()
            if self.at_op("{"):
                self.next()
                inner = self.parse_expr()
                close = self.expect_op("}")
                node = self.b.add(astree.other("varvar"), [inner],
                                  line_start=t.line, line_end=close.line_end)
                return node
            inner = self._parse_primary()
            node = self.b.add(astree.other("varvar"), [inner], line_start=t.line)
            self.b.span_from_children(node)
            return node
        if t.type == "ident":
            word = t.value.lower()
            if word in ("true", "false", "null"):
                self.next()
                return self.b.add(astree.LITERAL, value=word, line_start=t.line)
            if word == "function":
                self.next()
                return self._parse_closure(t)
            if word == "fn":
                self.next()
                self._skip_balanced_parens()
                self.expect_op("=>")
                body = self.parse_expr()
                node = self.b.add(astree.other("closure"), [body], line_start=t.line)
                self.b.span_from_children(node)
                return node
            self.next()
            symbol = t.value
            while self.at_op("\\") and self.peek(1).type == "ident":
                self.next()
                symbol += "\\" + self.next().value
            return self.b.add(astree.NAME, symbol=symbol, line_start=t.line)
        if t.type == "op" and t.value == "\\" and self.peek(1).type == "ident":
            self.next()
            nm = self.next()
            symbol = "\\" + nm.value
            while self.at_op("\\") and self.peek(1).type == "ident":
                self.next()
                symbol += "\\" + self.next().value
            return self.b.add(astree.NAME, symbol=symbol, line_start=t.line)
        if t.type == "number":
            self.next()
            return self.b.add(astree.LITERAL, value=t.value, line_start=t.line)
        if t.type == "sq":
            self.next()
            return self.b.add(astree.LITERAL, value=t.value,
                              line_start=t.line, line_end=t.line_end)
        if t.type == "dq":
            self.next()
            return _build_interpolated(self.b, t)
        if t.type == "op" and t.value == "(":
            self.next()
            inner = self.parse_expr()
            self.expect_op(")")
            return inner
        if t.type == "op" and t.value == "[":
            return self._parse_array_literal()
        raise ParseError("unexpected token %r" % (t.value or t.type),
                         t.line or self._last_line())

    def _parse_closure(self, t: Token) -> int:
        self._skip_balanced_parens()
        if self.at_kw("use"):
            self.next()
            self._skip_balanced_parens()
        while not self.at_op("{") and self.peek().type != "eof":
            self.next()
        open_tok = self.expect_op("{")
        stmts = self.parse_statements_until(("}",))
        close = self.expect_op("}")
        body = self.b.add(astree.STMT_LIST, stmts,
                          line_start=open_tok.line, line_end=close.line_end)
        return self.b.add(astree.other("closure"), [body],
                          line_start=t.line, line_end=close.line_end)

    def _parse_array_literal(self) -> int:
        open_tok = self.expect_op("[")
        items: list[int] = []
        while not self.at_op("]"):
            if self.peek().type == "eof":
                raise ParseError("unterminated array literal", open_tok.line)
            item = self.parse_expr()
            if self.at_op("=>"):
                self.next()
                val = self.parse_expr()
                pair = self.b.add(astree.other("kv"), [item, val],
                                  line_start=self.b._nodes[item].line_start)
                self.b.span_from_children(pair)
                item = pair
            items.append(item)
            if self.at_op(","):
                self.next()
        close = self.expect_op("]")
        node = self.b.add(astree.other("array"), items,
                          line_start=open_tok.line, line_end=close.line_end)
        return node


# ---------------------------------------------------------------------------
# Double-quoted string interpolation
# ---------------------------------------------------------------------------

def _build_interpolated(b: TreeBuilder, tok: Token) -> int:
    """Turn a double-quoted token into Encapsed(Literal/Var/... parts) or a plain Literal."""
    raw = tok.value
    parts: list[int] = []
    buf: list[str] = []
    i, n = 0, len(raw)
    line = tok.line + 1 if tok.heredoc else tok.line  # heredoc bodies start on the next line
    seg_line = line

    def flush(end_line: int) -> None:
        nonlocal buf, seg_line
        if buf:
            parts.append(b.add(astree.LITERAL, value="".join(buf),
                               line_start=seg_line, line_end=end_line))
            buf = []
        seg_line = end_line

    while i < n:
        ch = raw[i]
        if ch == "\\" and i + 1 < n:
            buf.append(raw[i:i + 2])
            if raw[i + 1] == "\n":
                line += 1
            i += 2
            continue
        if ch == "\n":
            buf.append(ch)
            line += 1
            i += 1
            continue
        if ch == "$" and i + 1 < n and _is_ident_start(raw[i + 1]):
            flush(line)
            i, line = _simple_hole(b, raw, i, line, parts)
            seg_line = line
            continue
        if ch == "$" and i + 1 < n and raw[i + 1] == "{":
            end = _find_closing_brace(raw, i + 1)
            if end == -1:
                buf.append(ch)
                i += 1
                continue
            flush(line)
            inner = raw[i + 2:end]
            parts.append(b.add(astree.VAR, symbol="$" + inner,
                               line_start=line, line_end=line + inner.count("\n")))
            line += inner.count("\n")
            i = end + 1
            seg_line = line
            continue
        if ch == "{" and i + 1 < n and raw[i + 1] == "$":
            end = _find_closing_brace(raw, i)
            if end == -1:
                buf.append(ch)
                i += 1
                continue
            flush(line)
            fragment = raw[i + 1:end]
            toks = lex_fragment(fragment, line)
            sub = _Parser(toks, b)
            parts.append(sub.parse_expr())
            line += fragment.count("\n")
            i = end + 1
            seg_line = line
            continue
        buf.append(ch)
        i += 1
    if not parts:
        return b.add(astree.LITERAL, value=raw, line_start=tok.line, line_end=tok.line_end)
    flush(line)
    node = b.add(astree.ENCAPSED, parts, line_start=tok.line, line_end=tok.line_end)
    return node


def _simple_hole(b: TreeBuilder, raw: str, i: int, line: int,
                 parts: list[int]) -> tuple[int, int]:
    """Parse $name, $name[idx] or $name->prop starting at raw[i] == '$'."""
    j = i + 1
    while j < len(raw) and _is_ident_char(raw[j]):
        j += 1
    var_id = b.add(astree.VAR, symbol=raw[i:j], line_start=line)
    node = var_id
    if j < len(raw) and raw[j] == "[":
        close = raw.find("]", j)
        if close != -1:
            key = raw[j + 1:close]
            idx = None
            if key.startswith("$"):
                idx = b.add(astree.VAR, symbol=key, line_start=line)
            elif key and (key[0].isdigit() or key[0] == "-"):
                idx = b.add(astree.LITERAL, value=key, line_start=line)
            elif key and all(_is_ident_char(c) for c in key):
                idx = b.add(astree.LITERAL, value=key, line_start=line)
            elif key and key[0] in "'\"" and key[-1] == key[0] and len(key) >= 2:
                idx = b.add(astree.LITERAL, value=key[1:-1], line_start=line)
            if idx is not None:
                node = b.add(astree.ARRAY_DIM, [var_id, idx], line_start=line)
                j = close + 1
    elif raw.startswith("->", j) and j + 2 < len(raw) and _is_ident_start(raw[j + 2]):
        k = j + 2
        while k < len(raw) and _is_ident_char(raw[k]):
            k += 1
        prop = b.add(astree.NAME, symbol=raw[j + 2:k], line_start=line)
        node = b.add(astree.other("prop"), [var_id, prop], line_start=line)
        j = k
    parts.append(node)
    return j, line


def _find_closing_brace(raw: str, start: int) -> int:
    """Index of the '}' matching raw[start] == '{' (quote-aware), or -1."""
    depth = 0
    i = start
    quote = None
    while i < len(raw):
        ch = raw[i]
        if quote:
            if ch == "\\":
                i += 2
                continue
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return i
        i += 1
    return -1


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def parse_source(text: str | bytes, path: str = "<memory>") -> SourceUnit:
    """Parse PHP source into a SourceUnit.

    Raises LexError / ParseError (both carry a line number) when the file
    cannot be tokenized or has unbalanced delimiters; callers scanning a
    corpus treat that as a skippable file.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    if text.startswith("\ufeff"):
        text = text[1:]
    toks = tokenize(text)
    b = TreeBuilder()
    p = _Parser(toks, b)
    stmts = p.parse_statements_until(())
    if p.peek().type != "eof":
        raise ParseError("unexpected %r at top level" % p.peek().value, p.peek().line)
    last_line = max((t.line_end for t in toks), default=1)
    root = b.add(astree.STMT_LIST, stmts, line_start=1, line_end=max(last_line, 1))
    return b.finish(path, root)
