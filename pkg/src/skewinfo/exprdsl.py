"""A tiny expression language for user-defined kernels and skewing functions.

Grammar: literals, variables z and delta, constants pi and e, operators
+ - * / ^ (with unary minus), and a closed set of functions.  Precedence,
highest first: ^ (right associative), unary -, * /, + -.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError
from . import special

VARIABLES = ("z", "delta")
CONSTANTS = {"pi": np.pi, "e": np.e}
FUNCTIONS = ("exp", "log", "abs", "sign", "sqrt", "sin", "cos", "tanh",
             "phi", "Phi", "logistic")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = (Num, Var, Const, Neg, BinOp, Call)


# --- tokenizer -------------------------------------------------------------

_OPS = "+-*/^(),"


def _tokenize(src):
    # Token positions are 1-based byte offsets, matching ParseError's contract.
    tokens = []
    i, n = 0, len(src)
    while i < n:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _OPS:
            tokens.append((c, c, i + 1))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and (src[j].isdigit() or src[j] == "."):
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            text = src[i:j]
            try:
                value = float(text)
            except ValueError:
                raise ParseError(i + 1, f"malformed number {text!r}", {"number"})
            tokens.append(("num", value, i + 1))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("name", src[i:j], i + 1))
            i = j
            continue
        raise ParseError(i + 1, f"unexpected character {c!r}",
                         {"number", "name", "operator"})
    tokens.append(("end", None, n + 1))
    return tokens


# --- Pratt parser ----------------------------------------------------------

_BINDING = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok[0] != kind:
            raise ParseError(tok[2], f"expected {kind!r}", {kind})
        return tok

    def parse_expression(self, min_bp=0):
        left = self.parse_prefix()
        while True:
            kind, _, _ = self.peek()
            bp = _BINDING.get(kind)
            if bp is None or bp < min_bp:
                return left
            self.advance()
            # ^ is right-associative: its right operand may bind equally.
            right = self.parse_expression(bp if kind == "^" else bp + 1)
            left = BinOp(kind, left, right)

    def parse_prefix(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return Num(value)
        if kind == "-":
            return Neg(self.parse_expression(_UNARY_BP))
        if kind == "(":
            inner = self.parse_expression(0)
            self.expect(")")
            return inner
        if kind == "name":
            if value in FUNCTIONS:
                nxt = self.peek()
                if nxt[0] != "(":
                    raise ParseError(nxt[2],
                                     f"function {value!r} requires '('", {"("})
                self.advance()
                arg = self.parse_expression(0)
                self.expect(")")
                return Call(value, arg)
            if value in VARIABLES:
                return Var(value)
            if value in CONSTANTS:
                return Const(value)
            raise ParseError(pos, f"unknown identifier {value!r}",
                             set(VARIABLES) | set(CONSTANTS) | set(FUNCTIONS))
        raise ParseError(pos, "expected expression",
                         {"number", "name", "(", "-"})


def parse(src):
    """Parse source text into an AST; raises ParseError with a byte offset."""
    if isinstance(src, bytes):
        src = src.decode("utf-8")
    parser = _Parser(_tokenize(src))
    expr = parser.parse_expression(0)
    kind, _, pos = parser.peek()
    if kind != "end":
        raise ParseError(pos, f"unexpected trailing {kind!r}", {"end"})
    return expr


# --- printer ---------------------------------------------------------------

def _prec(e):
    if isinstance(e, BinOp):
        return _BINDING[e.op]
    if isinstance(e, Neg):
        return _UNARY_BP
    return 100


def format_expr(e):
    """Render an AST back to source; parse(format_expr(e)) == e."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, (Var, Const)):
        return e.name
    if isinstance(e, Neg):
        inner = format_expr(e.operand)
        if _prec(e.operand) <= _UNARY_BP:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    if isinstance(e, BinOp):
        bp = _BINDING[e.op]
        left = format_expr(e.left)
        right = format_expr(e.right)
        if _prec(e.left) < bp or (isinstance(e.left, BinOp) and e.op == "^"):
            left = f"({left})"
        rbound = bp if e.op == "^" else bp + 1
        if _prec(e.right) < rbound:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression node: {e!r}")


# --- evaluator -------------------------------------------------------------

def _check_finite(value, what):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{what} produced a non-finite value")
    return value


_FUNC_IMPL = {
    "exp": np.exp,
    "abs": np.abs,
    "sign": np.sign,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "phi": special.norm_pdf,
    "Phi": special.norm_cdf,
    "logistic": special.logistic_cdf,
}


def eval_expr(e, bindings):
    """Evaluate an AST at bindings {'z': ..., 'delta': ...}.

    Scalars or numpy arrays are accepted and broadcast elementwise.
    Raises DomainError for log/sqrt/power/division domain violations.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name not in bindings:
            raise DomainError(f"unbound variable {e.name!r}")
        return np.asarray(bindings[e.name], dtype=float)
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -eval_expr(e.operand, bindings)
    if isinstance(e, Call):
        arg = eval_expr(e.arg, bindings)
        if e.func == "log":
            if np.any(np.asarray(arg) <= 0):
                raise DomainError("log of non-positive value")
            return np.log(arg)
        if e.func == "sqrt":
            if np.any(np.asarray(arg) < 0):
                raise DomainError("sqrt of negative value")
            return np.sqrt(arg)
        return _check_finite(_FUNC_IMPL[e.func](arg), e.func)
    if isinstance(e, BinOp):
        a = eval_expr(e.left, bindings)
        b = eval_expr(e.right, bindings)
        if e.op == "+":
            return _check_finite(a + b, "+")
        if e.op == "-":
            return _check_finite(a - b, "-")
        if e.op == "*":
            return _check_finite(a * b, "*")
        if e.op == "/":
            if np.any(np.asarray(b) == 0):
                raise DomainError("division by zero")
            return _check_finite(a / b, "/")
        if e.op == "^":
            a_arr, b_arr = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
            neg_base = a_arr < 0
            if np.any(neg_base & (b_arr != np.round(b_arr))):
                raise DomainError("negative base with non-integer exponent")
            if np.any((a_arr == 0) & (b_arr < 0)):
                raise DomainError("zero base with negative exponent")
            return _check_finite(np.power(a_arr, b_arr), "^")
    raise TypeError(f"not an expression node: {e!r}")


def free_variables(e):
    """Set of variable names appearing in the AST."""
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, Call):
        return free_variables(e.arg)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    return set()
