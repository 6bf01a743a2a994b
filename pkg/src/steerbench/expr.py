"""Arithmetic expression parser and exact rational evaluator.

Grammar: the four basic operations over non-negative integer literals, with
standard precedence (* / over + -), left associativity, and parentheses.
Unicode variants (x: ×, /: ÷, minus: −) are accepted as aliases. Unary
minus is allowed only at the start of an expression or parenthesised group
and is desugared to ``0 - x`` with a synthetic zero that never counts as an
operand. Anything else (exponents, modulo, names, decimals) is a syntax
error, which keeps Game 24 checking sound.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

OPS = ("+", "-", "*", "/")

_ALIASES = {"×": "*", "÷": "/", "−": "-"}


class ExprSyntaxError(ValueError):
    """Malformed expression text; ``offset`` is the index of the offending char."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class DivisionByZero(ArithmeticError):
    """Exact division by zero; ``node`` is the offending subtree."""

    def __init__(self, node: "Binary"):
        super().__init__(f"division by zero in {format_ast(node)}")
        self.node = node


@dataclass(frozen=True)
class Leaf:
    value: int
    # True only for the implicit 0 introduced by unary minus; excluded from
    # the operand multiset.
    synthetic: bool = False


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Ast"
    right: "Ast"


Ast = Union[Leaf, Binary]


def _is_unary(node: Ast) -> bool:
    return (
        isinstance(node, Binary)
        and node.op == "-"
        and isinstance(node.left, Leaf)
        and node.left.synthetic
    )


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip_ws()
        if self.pos >= len(self.text):
            return ""
        ch = self.text[self.pos]
        return _ALIASES.get(ch, ch)

    def _take(self) -> str:
        ch = self._peek()
        self.pos += 1
        return ch

    def parse(self) -> Ast:
        node = self.expression()
        self._skip_ws()
        if self.pos < len(self.text):
            raise ExprSyntaxError("trailing input", self.pos)
        return node

    def expression(self, at_start: bool = True) -> Ast:
        if at_start and self._peek() == "-":
            self._take()
            node: Ast = Binary("-", Leaf(0, synthetic=True), self.term())
        else:
            node = self.term()
        while self._peek() in ("+", "-"):
            op = self._take()
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Ast:
        node = self.factor()
        while self._peek() in ("*", "/"):
            op = self._take()
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Ast:
        ch = self._peek()
        if ch == "(":
            self._take()
            node = self.expression()
            if self._peek() != ")":
                raise ExprSyntaxError("expected ')'", self.pos)
            self._take()
            return node
        if ch.isdigit():
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            return Leaf(int(self.text[start : self.pos]))
        if ch == "":
            raise ExprSyntaxError("unexpected end of input", self.pos)
        raise ExprSyntaxError(f"unexpected {ch!r}", self.pos)


def parse(text: str) -> Ast:
    """Parse ``text`` into an Ast, raising ExprSyntaxError on malformed input."""
    return _Parser(text).parse()


def eval_exact(ast: Ast) -> Fraction:
    """Evaluate an Ast under exact rational arithmetic (no rounding, ever)."""
    if isinstance(ast, Leaf):
        return Fraction(ast.value)
    left = eval_exact(ast.left)
    right = eval_exact(ast.right)
    if ast.op == "+":
        return left + right
    if ast.op == "-":
        return left - right
    if ast.op == "*":
        return left * right
    if right == 0:
        raise DivisionByZero(ast)
    return left / right


def leaf_multiset(ast: Ast) -> Counter:
    """Multiset of literal operands, duplicates preserved, synthetic zeros excluded."""
    counts: Counter = Counter()

    def walk(node: Ast):
        if isinstance(node, Leaf):
            if not node.synthetic:
                counts[node.value] += 1
            return
        walk(node.left)
        walk(node.right)

    walk(ast)
    return counts


def _prec(node: Ast) -> int:
    if isinstance(node, Leaf):
        return 3
    return 2 if node.op in ("*", "/") else 1


def format_ast(ast: Ast) -> str:
    """Render an Ast to text that reparses to a structurally identical tree."""
    if isinstance(ast, Leaf):
        return str(ast.value)
    if _is_unary(ast):
        inner = format_ast(ast.right)
        if _prec(ast.right) < 2:
            inner = f"({inner})"
        # Parenthesised so the unary minus stays at a group start wherever
        # this node is embedded.
        return f"(-{inner})"
    left = format_ast(ast.left)
    right = format_ast(ast.right)
    if _prec(ast.left) < _prec(ast) and not _is_unary(ast.left):
        left = f"({left})"
    # The parser is left-associative, so a Binary right operand needs parens
    # at equal precedence as well as lower.
    if _prec(ast.right) <= _prec(ast) and not _is_unary(ast.right):
        right = f"({right})"
    return f"{left} {ast.op} {right}"
