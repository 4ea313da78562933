"""Parser and AST for closed-form coordinate expressions.

Expressions are written over variables ``u1 .. un``, numeric literals, the
constants ``pi`` and ``e``, the binary operators ``+ - * / ^`` (with ``^``
right-associative), unary minus, and a fixed set of unary functions applied
with parentheses.  The grammar is deliberately small and closed: no
user-defined functions, no implicit multiplication.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

FUNCTIONS = (
    "sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan",
)
CONSTANTS = {"pi": math.pi, "e": math.e}


class ExprError(ValueError):
    """Problem with an expression source string.

    Carries the byte offset into the source at which the problem was
    detected.
    """

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Const:
    name: str  # "pi" or "e"


@dataclass(frozen=True)
class Var:
    index: int  # 0-based; "u1" has index 0


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of "+", "-", "*", "/", "^"
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Expr"


Expr = Union[Num, Const, Var, Neg, BinOp, Call]


# ---------------------------------------------------------------------------
# tokenizer


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    offset: int


_OP_CHARS = "+-*/^()"


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _OP_CHARS:
            tokens.append(_Token("op", c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            # exponent part like 1e-3 / 2.5E+10
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    while k < n and src[k].isdigit():
                        k += 1
                    j = k
            tokens.append(_Token("num", src[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(_Token("ident", src[i:j], i))
            i = j
            continue
        raise ExprError(f"unexpected character {c!r}", i)
    tokens.append(_Token("end", "", n))
    return tokens


# ---------------------------------------------------------------------------
# recursive-descent parser
#
#   expr   := term  (("+"|"-") term)*
#   term   := factor (("*"|"/") factor)*
#   factor := "-" factor | power
#   power  := atom ("^" factor)?          -- right-associative
#   atom   := num | const | var | fn "(" expr ")" | "(" expr ")"


class _Parser:
    def __init__(self, tokens: list[_Token], dim: int):
        self.tokens = tokens
        self.pos = 0
        self.dim = dim

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ExprError(f"expected {text!r}", tok.offset)
        self.advance()

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.parse_factor())
        return node

    def parse_factor(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            return Neg(self.parse_factor())
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return BinOp("^", base, self.parse_factor())
        return base

    def parse_atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Num(float(tok.text))
        if tok.kind == "ident":
            name = tok.text
            if name in CONSTANTS:
                return Const(name)
            if name in FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expr()
                self.expect_op(")")
                return Call(name, arg)
            if name.startswith("u") and name[1:].isdigit():
                index = int(name[1:])
                if not 1 <= index <= self.dim:
                    raise ExprError(
                        f"variable {name} out of range for dimension {self.dim}",
                        tok.offset,
                    )
                return Var(index - 1)
            raise ExprError(f"unknown identifier {name!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ExprError("expected a number, variable, function or '('", tok.offset)


def parse_expr(src: str, dim: int) -> Expr:
    """Parse ``src`` into an AST over variables ``u1 .. u<dim>``.

    Raises
    ------
    ExprError
        On a syntax error, an unknown identifier, or a variable index
        exceeding ``dim``; the exception carries the byte offset.
    """
    if not src or src.isspace():
        raise ExprError("empty expression", 0)
    if dim < 1:
        raise ValueError("dimension must be positive")
    parser = _Parser(_tokenize(src), dim)
    node = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "end":
        raise ExprError(f"unexpected trailing input {tok.text!r}", tok.offset)
    return node


# ---------------------------------------------------------------------------
# printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC["atom"]


def to_source(node: Expr) -> str:
    """Render an AST back to source.

    The output reparses (with :func:`parse_expr`) to a structurally
    identical tree.
    """
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return f"u{node.index + 1}"
    if isinstance(node, Call):
        return f"{node.fn}({to_source(node.arg)})"
    if isinstance(node, Neg):
        inner = to_source(node.arg)
        # parenthesize anything the unary minus would not re-absorb
        if _prec(node.arg) <= _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, BinOp):
        lp = _prec(node.left)
        rp = _prec(node.right)
        p = _PREC[node.op]
        left = to_source(node.left)
        right = to_source(node.right)
        # '^' is right-associative: parenthesize an equal-precedence left child.
        if lp < p or (lp == p and node.op == "^"):
            left = f"({left})"
        # '-' and '/' are left-associative: parenthesize equal precedence on
        # the right; a Neg right child always needs parentheses after '^'.
        if rp < p or (rp == p and node.op in ("-", "/", "+", "*")):
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an Expr node: {node!r}")


def depth(node: Expr) -> int:
    """Tree depth counted in edges; leaves have depth 0."""
    if isinstance(node, (Num, Const, Var)):
        return 0
    if isinstance(node, Neg):
        return 1 + depth(node.arg)
    if isinstance(node, Call):
        return 1 + depth(node.arg)
    if isinstance(node, BinOp):
        return 1 + max(depth(node.left), depth(node.right))
    raise TypeError(f"not an Expr node: {node!r}")


def variables_used(node: Expr) -> set[int]:
    """0-based indices of the variables appearing in the tree."""
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, (Num, Const)):
        return set()
    if isinstance(node, Neg):
        return variables_used(node.arg)
    if isinstance(node, Call):
        return variables_used(node.arg)
    if isinstance(node, BinOp):
        return variables_used(node.left) | variables_used(node.right)
    raise TypeError(f"not an Expr node: {node!r}")
