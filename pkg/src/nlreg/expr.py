"""Expression language for plant and cost definitions.

Grammar (``-`` may also be written as the Unicode minus ``−``)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := base ('^' int)?
    base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' factor

Identifiers are state variables ``x1..xn`` and inputs ``u1..um``; functions
are ``sin cos exp tanh ln cosh``.  Exponents are positive integer literals
and divisors must be variable-free nonzero constants, which keeps every
expression analytic at the origin.
"""
from dataclasses import dataclass, field
import re

import numpy as np

from .errors import AffinityError, InputError, ParseError

__all__ = [
    "Num", "Var", "BinOp", "Neg", "Pow", "Call", "FUNCTIONS",
    "parse_expr", "to_source", "evaluate", "variables", "depends_on_inputs",
    "constant_value", "split_affine",
]

FUNCTIONS = {
    "sin": np.sin, "cos": np.cos, "exp": np.exp,
    "tanh": np.tanh, "ln": np.log, "cosh": np.cosh,
}


@dataclass(frozen=True)
class Num:
    value: float
    loc: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "u"
    index: int  # 1-based
    loc: tuple = field(default=None, compare=False, repr=False)

    @property
    def name(self):
        return f"{self.kind}{self.index}"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    loc: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    loc: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    loc: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    arg: object
    loc: tuple = field(default=None, compare=False, repr=False)


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()−])
    """,
    re.VERBOSE,
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(source):
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            for i, ch in enumerate(text):
                if ch == "\n":
                    line += 1
                    line_start = pos + i + 1
        else:
            if text == "−":
                text = "-"
            tokens.append(_Token(kind, text, line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("end", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, source, n, m):
        self.tokens = _tokenize(source)
        self.pos = 0
        self.n = n
        self.m = m

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, text):
        tok = self.peek()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", tok.line, tok.col)
        return self.advance()

    def parse(self):
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected {tok.text!r}", tok.line, tok.col)
        return node

    def expr(self):
        node = self.term()
        while self.peek().text in ("+", "-"):
            tok = self.advance()
            node = BinOp(tok.text, node, self.term(), loc=(tok.line, tok.col))
        return node

    def term(self):
        node = self.factor()
        while self.peek().text in ("*", "/"):
            tok = self.advance()
            node = BinOp(tok.text, node, self.factor(), loc=(tok.line, tok.col))
        return node

    def factor(self):
        node = self.base()
        if self.peek().text == "^":
            tok = self.advance()
            exp_tok = self.advance()
            if exp_tok.kind != "number" or not exp_tok.text.isdigit() or int(exp_tok.text) < 1:
                raise ParseError("exponent must be a positive integer literal", exp_tok.line, exp_tok.col)
            node = Pow(node, int(exp_tok.text), loc=(tok.line, tok.col))
        return node

    def base(self):
        tok = self.advance()
        loc = (tok.line, tok.col)
        if tok.kind == "number":
            return Num(float(tok.text), loc=loc)
        if tok.text == "-":
            return Neg(self.factor(), loc=loc)
        if tok.text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "ident":
            if tok.text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(tok.text, arg, loc=loc)
            return self.variable(tok)
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.line, tok.col)

    def variable(self, tok):
        m = re.fullmatch(r"([xu])([1-9]\d*)", tok.text)
        if m is None:
            raise ParseError(f"unknown identifier {tok.text!r}", tok.line, tok.col)
        kind, index = m.group(1), int(m.group(2))
        limit = self.n if kind == "x" else self.m
        if limit is not None and index > limit:
            raise ParseError(f"unknown identifier {tok.text!r} (only {limit} {kind}-variables)",
                             tok.line, tok.col)
        if self.peek().text == "(":
            raise ParseError(f"{tok.text!r} is not a function", tok.line, tok.col)
        return Var(kind, index, loc=(tok.line, tok.col))


def parse_expr(source, n=None, m=None):
    """Parse ``source`` into an AST; ``n``/``m`` bound the variable indices."""
    if isinstance(source, (int, float)) and not isinstance(source, bool):
        source = repr(float(source))
    if not isinstance(source, str):
        raise InputError(f"expression must be a string, got {type(source).__name__}")
    node = _Parser(source, n, m).parse()
    _check_divisors(node)
    return node


def _check_divisors(node):
    for sub in _walk(node):
        if isinstance(sub, BinOp) and sub.op == "/":
            value = constant_value(sub.right)
            line, col = sub.loc or (None, None)
            if value is None:
                raise ParseError("division is only allowed by constants", line, col)
            if value == 0.0:
                raise ParseError("division by zero", line, col)


def _walk(node):
    yield node
    if isinstance(node, BinOp):
        yield from _walk(node.left)
        yield from _walk(node.right)
    elif isinstance(node, (Neg,)):
        yield from _walk(node.operand)
    elif isinstance(node, Pow):
        yield from _walk(node.base)
    elif isinstance(node, Call):
        yield from _walk(node.arg)


def variables(node):
    """Set of variable names occurring in ``node``."""
    return {sub.name for sub in _walk(node) if isinstance(sub, Var)}


def depends_on_inputs(node):
    return any(isinstance(sub, Var) and sub.kind == "u" for sub in _walk(node))


def constant_value(node):
    """Numeric value of a variable-free expression, else ``None``."""
    if variables(node):
        return None
    with np.errstate(all="ignore"):
        return float(evaluate(node, {}))


def to_source(node):
    """Fully parenthesized source text that re-parses to an equal AST."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Pow):
        return f"({to_source(node.base)})^{node.exponent}"
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def evaluate(node, env):
    """Evaluate with numpy broadcasting; ``env`` maps names to arrays."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise InputError(f"no value bound for {node.name}") from None
    if isinstance(node, BinOp):
        a, b = evaluate(node.left, env), evaluate(node.right, env)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return a / b
    if isinstance(node, Neg):
        return -evaluate(node.operand, env)
    if isinstance(node, Pow):
        return evaluate(node.base, env) ** node.exponent
    if isinstance(node, Call):
        return FUNCTIONS[node.func](evaluate(node.arg, env))
    raise TypeError(f"not an expression node: {node!r}")


# -- control-affinity split ---------------------------------------------

_ZERO = Num(0.0)
_ONE = Num(1.0)


def _add(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return BinOp("+", a, b)


def _scale(a, factor, op="*"):
    if op == "*" and a == _ONE:
        return factor
    return BinOp(op, a, factor)


def _nonlinear(node, why):
    line, col = node.loc or (None, None)
    where = f" at line {line}, column {col}" if line is not None else ""
    return AffinityError(f"input enters nonlinearly{where} in {to_source(node)}: {why}")


def _split(node):
    """Map ``None`` -> drift part and ``i`` -> coefficient of ``u_i``."""
    if not depends_on_inputs(node):
        return {None: node}
    if isinstance(node, Var):
        return {node.index: _ONE}
    if isinstance(node, Neg):
        return {key: Neg(part) for key, part in _split(node.operand).items()}
    if isinstance(node, BinOp):
        if node.op in ("+", "-"):
            left, right = _split(node.left), _split(node.right)
            if node.op == "-":
                right = {key: Neg(part) for key, part in right.items()}
            out = dict(left)
            for key, part in right.items():
                out[key] = _add(out.get(key), part)
            return out
        if node.op == "*":
            lu, ru = depends_on_inputs(node.left), depends_on_inputs(node.right)
            if lu and ru:
                raise _nonlinear(node, "product of two input-dependent factors")
            inner, factor = (node.left, node.right) if lu else (node.right, node.left)
            return {key: _scale(part, factor) for key, part in _split(inner).items()}
        # division: divisor is a constant by construction
        return {key: _scale(part, node.right, "/") for key, part in _split(node.left).items()}
    if isinstance(node, Pow):
        if node.exponent == 1:
            return _split(node.base)
        raise _nonlinear(node, f"input raised to power {node.exponent}")
    if isinstance(node, Call):
        raise _nonlinear(node, f"input inside {node.func}()")
    raise TypeError(f"not an expression node: {node!r}")


def split_affine(node, m):
    """Split ``node`` into ``(f, [g_1..g_m])`` with ``node = f + sum g_i u_i``."""
    parts = _split(node)
    f = parts.get(None, _ZERO)
    g = [parts.get(i, _ZERO) for i in range(1, m + 1)]
    extra = sorted(k for k in parts if k is not None and k > m)
    if extra:
        raise InputError(f"input u{extra[0]} exceeds m={m}")
    return f, g
