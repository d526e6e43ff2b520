"""Lexer, recursive-descent parser and evaluator for scalar expressions.

Grammar (highest binding last)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?          # right-associative
    primary := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

Exponents must be constant expressions.  The scene-file grammar built on top
of these expressions lives in :mod:`riemap.scene`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping

from . import jets
from .errors import LexError, ParseError, SingularityError, UsageError

FUNCTIONS = tuple(jets.ELEMENTARY)
KEYWORDS = frozenset(
    {"manifold", "spaceform", "map", "analysis", "dim", "coords", "metric", "domain", "curvature"}
)
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class Token:
    kind: str  # NUM IDENT KEYWORD OP ARROW LPAREN RPAREN LBRACE RBRACE LBRACK RBRACK COMMA COLON EQUALS EOF
    text: str
    line: int
    column: int
    value: float | None = None

    def __repr__(self) -> str:
        return f"{self.kind}({self.text!r})"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<arrow>->)
  | (?P<op>[-+*/^])
  | (?P<punct>[(){}\[\],:=])
    """,
    re.VERBOSE,
)

_PUNCT = {
    "(": "LPAREN",
    ")": "RPAREN",
    "{": "LBRACE",
    "}": "RBRACE",
    "[": "LBRACK",
    "]": "RBRACK",
    ",": "COMMA",
    ":": "COLON",
    "=": "EQUALS",
}


def tokenize(text: str) -> list[Token]:
    """Split ``text`` into tokens; whitespace and ``#`` comments are dropped."""
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise LexError(f"illegal character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        s = m.group()
        if kind == "newline":
            line += 1
            line_start = m.end()
        elif kind == "num":
            tokens.append(Token("NUM", s, line, col, float(s)))
        elif kind == "ident":
            tokens.append(Token("KEYWORD" if s in KEYWORDS else "IDENT", s, line, col))
        elif kind == "arrow":
            tokens.append(Token("ARROW", s, line, col))
        elif kind == "op":
            tokens.append(Token("OP", s, line, col))
        elif kind == "punct":
            tokens.append(Token(_PUNCT[s], s, line, col))
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


# -- AST --------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"
    pos: tuple[int, int] | None = field(default=None, compare=False)


Expr = Num | Var | Neg | BinOp | Call


class ExprParser:
    """Recursive-descent parser over a token list.

    ``expression()`` stops at the first token that cannot continue an
    expression, which is how the scene parser finds statement boundaries.
    """

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        return ParseError(f"{message}, found {found}", tok.line, tok.column)

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.tok
        if t.kind != kind or (text is not None and t.text != text):
            raise self.error(f"expected {text or kind}")
        return self.advance()

    def at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def expression(self) -> Expr:
        node = self.term()
        while self.at_op("+", "-"):
            t = self.advance()
            node = BinOp(t.text, node, self.term(), (t.line, t.column))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.at_op("*", "/"):
            t = self.advance()
            node = BinOp(t.text, node, self.unary(), (t.line, t.column))
        return node

    def unary(self) -> Expr:
        if self.at_op("-"):
            t = self.advance()
            return Neg(self.unary(), (t.line, t.column))
        return self.power()

    def power(self) -> Expr:
        base = self.primary()
        if self.at_op("^"):
            t = self.advance()
            start = self.tok
            exponent = self.unary()
            if free_variables(exponent):
                raise ParseError("exponent must be a constant expression", start.line, start.column)
            return BinOp("^", base, exponent, (t.line, t.column))
        return base

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return Num(t.value, (t.line, t.column))
        if t.kind == "IDENT":
            self.advance()
            if self.tok.kind == "LPAREN":
                if t.text not in FUNCTIONS:
                    raise ParseError(f"unknown function {t.text!r}", t.line, t.column)
                self.advance()
                arg = self.expression()
                if self.tok.kind == "COMMA":
                    raise self.error(f"{t.text} takes one argument")
                self.expect("RPAREN", ")")
                return Call(t.text, arg, (t.line, t.column))
            if t.text in FUNCTIONS:
                raise ParseError(f"function {t.text!r} requires parentheses", t.line, t.column)
            if t.text in CONSTANTS:
                return Num(CONSTANTS[t.text], (t.line, t.column))
            return Var(t.text, (t.line, t.column))
        if t.kind == "LPAREN":
            self.advance()
            node = self.expression()
            if self.tok.kind != "RPAREN":
                raise self.error("unbalanced parentheses: expected ')'")
            self.advance()
            return node
        raise self.error("unexpected token")


def parse_expression(tokens: list[Token] | str) -> Expr:
    """Parse a complete expression (all tokens must be consumed)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    p = ExprParser(tokens)
    node = p.expression()
    if p.tok.kind != "EOF":
        if p.tok.kind == "RPAREN":
            raise p.error("unbalanced parentheses")
        raise p.error("unexpected token")
    return node


# -- traversal helpers ------------------------------------------------------


def free_variables(node: Expr) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Call):
        return free_variables(node.arg)
    return free_variables(node.left) | free_variables(node.right)


def substitute(node: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (used to compose maps)."""
    if isinstance(node, Var):
        return mapping.get(node.name, node)
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.operand, mapping), node.pos)
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, mapping), node.pos)
    return BinOp(node.op, substitute(node.left, mapping), substitute(node.right, mapping), node.pos)


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def to_text(node: Expr) -> str:
    """Pretty-print with the minimum parentheses that re-parse identically."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_text(node.arg)})"
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return f"-({inner})" if _prec(node.operand) < _PREC["neg"] else f"-{inner}"
    p = _PREC[node.op]
    left, right = to_text(node.left), to_text(node.right)
    if node.op == "^":
        if _prec(node.left) <= p:
            left = f"({left})"
        if _prec(node.right) < _PREC["neg"]:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# -- evaluation -------------------------------------------------------------


def _raise_at(err: SingularityError, node: Expr, point) -> SingularityError:
    if err.position is not None:
        return err
    return SingularityError(err.message, point=point if point is not None else err.point,
                            position=node.pos)


def eval_ast(node: Expr, env: Mapping[str, object], point=None):
    """Evaluate over jets (or plain floats) bound in ``env``.

    Singularities are re-raised with the source position of the offending
    node and, when given, the base ``point``.
    """
    try:
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Var):
            try:
                return env[node.name]
            except KeyError:
                raise UsageError(f"variable {node.name!r} is not bound") from None
        if isinstance(node, Neg):
            return -eval_ast(node.operand, env, point)
        if isinstance(node, Call):
            return jets.ELEMENTARY[node.fn](eval_ast(node.arg, env, point))
        left = eval_ast(node.left, env, point)
        if node.op == "^":
            return jets.pow_const(left, constant_value(node.right))
        right = eval_ast(node.right, env, point)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if not isinstance(right, jets.Jet) and right == 0:
            raise SingularityError("division by zero")
        return left / right
    except SingularityError as err:
        raise _raise_at(err, node, point) from None
    except (ZeroDivisionError, ValueError, OverflowError) as err:
        raise SingularityError(str(err), point=point, position=node.pos) from None


def eval_float(node: Expr, env: Mapping[str, float]) -> float:
    return float(eval_ast(node, env))


def constant_value(node: Expr) -> float:
    if free_variables(node):
        raise UsageError("expression is not constant")
    return float(eval_ast(node, {}))


def load_scene(path):
    """Parse and validate a scene file (see :mod:`riemap.scene`)."""
    from .scene import load_scene as _load

    return _load(path)
