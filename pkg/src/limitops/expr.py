"""A small arithmetic expression language for coefficient fields.

Expressions are parsed by a recursive-descent parser into an AST and
evaluated vectorized over numpy coordinate arrays; no Python eval is ever
involved. Variables n1..n9 refer to lattice coordinates (n is an alias for
n1), pi and e are constants, i is the imaginary unit, and the function set is
fixed below.
"""

import numpy as np

from .errors import InvalidConfigError

_FUNCS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "exp": np.exp,
    "log": np.log,
    "sign": np.sign,
    "floor": np.floor,
    "ceil": np.ceil,
}

_CONSTS = {"pi": np.pi, "e": np.e, "i": 1j}


class _Tokens:
    def __init__(self, src):
        self.src = src
        self.toks = []
        i, n = 0, len(src)
        while i < n:
            c = src[i]
            if c.isspace():
                i += 1
            elif c.isdigit() or c == ".":
                j = i
                while j < n and (src[j].isdigit() or src[j] == "."):
                    j += 1
                # exponent part like 1e-3
                if j < n and src[j] in "eE" and j + 1 < n and (
                    src[j + 1].isdigit() or src[j + 1] in "+-"
                ):
                    j += 2
                    while j < n and src[j].isdigit():
                        j += 1
                self.toks.append(("num", src[i:j]))
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < n and (src[j].isalnum() or src[j] == "_"):
                    j += 1
                self.toks.append(("name", src[i:j]))
                i = j
            elif src.startswith("**", i):
                self.toks.append(("op", "^"))
                i += 2
            elif c in "+-*/^(),":
                self.toks.append(("op", c))
                i += 1
            else:
                raise InvalidConfigError(f"bad character {c!r} in expression {src!r}")
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else ("end", "")

    def next(self):
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, val):
        kind, v = self.next()
        if v != val:
            raise InvalidConfigError(f"expected {val!r}, got {v!r} in {self.src!r}")


class Expression:
    """Compiled expression; evaluate with coords of shape (n, dim)."""

    def __init__(self, source):
        self.source = source
        toks = _Tokens(source)
        self._ast = _parse_sum(toks)
        if toks.peek()[0] != "end":
            raise InvalidConfigError(f"trailing input in expression {source!r}")
        self.variables = sorted(_collect_vars(self._ast))
        self.is_complex = _uses_imag(self._ast)

    def max_variable(self):
        return max((int(v[1:]) for v in self.variables), default=0)

    def eval(self, coords):
        coords = np.asarray(coords, dtype=np.float64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        out = _eval(self._ast, coords)
        if np.isscalar(out) or np.ndim(out) == 0:
            dt = np.complex128 if self.is_complex else np.float64
            out = np.full(coords.shape[0], out, dtype=dt)
        return out

    def __repr__(self):
        return f"Expression({self.source!r})"


def _parse_sum(t):
    node = _parse_term(t)
    while t.peek() == ("op", "+") or t.peek() == ("op", "-"):
        op = t.next()[1]
        node = (op, node, _parse_term(t))
    return node


def _parse_term(t):
    node = _parse_unary(t)
    while t.peek() == ("op", "*") or t.peek() == ("op", "/"):
        op = t.next()[1]
        node = (op, node, _parse_unary(t))
    return node


def _parse_unary(t):
    if t.peek() == ("op", "-"):
        t.next()
        return ("neg", _parse_unary(t))
    if t.peek() == ("op", "+"):
        t.next()
        return _parse_unary(t)
    return _parse_power(t)


def _parse_power(t):
    base = _parse_atom(t)
    if t.peek() == ("op", "^"):
        t.next()
        return ("^", base, _parse_unary(t))
    return base


def _parse_atom(t):
    kind, v = t.next()
    if kind == "num":
        try:
            return ("num", float(v))
        except ValueError:
            raise InvalidConfigError(f"bad number {v!r} in {t.src!r}") from None
    if kind == "name":
        if t.peek() == ("op", "("):
            if v not in _FUNCS:
                raise InvalidConfigError(f"unknown function {v!r} in {t.src!r}")
            t.next()
            arg = _parse_sum(t)
            t.expect(")")
            return ("call", v, arg)
        if v in _CONSTS:
            return ("const", v)
        if v == "n":
            return ("var", "n1")
        if v.startswith("n") and v[1:].isdigit() and len(v) >= 2:
            k = int(v[1:])
            if not 1 <= k <= 9:
                raise InvalidConfigError(f"variable {v!r} out of range n1..n9")
            return ("var", v)
        raise InvalidConfigError(f"unknown name {v!r} in expression {t.src!r}")
    if (kind, v) == ("op", "("):
        node = _parse_sum(t)
        t.expect(")")
        return node
    raise InvalidConfigError(f"unexpected token {v!r} in expression {t.src!r}")


def _collect_vars(node):
    tag = node[0]
    if tag == "var":
        return {node[1]}
    if tag in ("num", "const"):
        return set()
    if tag in ("neg",):
        return _collect_vars(node[1])
    if tag == "call":
        return _collect_vars(node[2])
    return _collect_vars(node[1]) | _collect_vars(node[2])


def _uses_imag(node):
    tag = node[0]
    if tag == "const":
        return node[1] == "i"
    if tag in ("num", "var"):
        return False
    if tag == "neg":
        return _uses_imag(node[1])
    if tag == "call":
        return _uses_imag(node[2])
    return _uses_imag(node[1]) or _uses_imag(node[2])


def _eval(node, coords):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "const":
        return _CONSTS[node[1]]
    if tag == "var":
        k = int(node[1][1:])
        if k > coords.shape[1]:
            raise InvalidConfigError(
                f"expression uses {node[1]} but the space has {coords.shape[1]} coordinates"
            )
        return coords[:, k - 1]
    if tag == "neg":
        return -_eval(node[1], coords)
    if tag == "call":
        with np.errstate(invalid="ignore", divide="ignore"):
            return _FUNCS[node[1]](_eval(node[2], coords))
    a, b = _eval(node[1], coords), _eval(node[2], coords)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        with np.errstate(invalid="ignore", divide="ignore"):
            return a / b
    if tag == "^":
        with np.errstate(invalid="ignore"):
            return a ** b
    raise InvalidConfigError(f"bad AST node {tag!r}")
