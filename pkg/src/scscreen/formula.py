"""Chemical-formula parsing, validation, and normalization.

Grammar (whitespace and the interpunct "·" act as separators and may
appear between any two tokens):

    formula   := item+
    item      := element subscript? | "(" item+ ")" subscript?
    subscript := term (sign term)*     e.g. 2, 0.35, x, 8+x, 2-x, 1+x-y
    term      := number | variable
    number    := digits with an optional decimal point
    variable  := a single alphabetic character that is not part of an
                 element symbol (e.g. the x in La2-xSrxCuO4)

Element symbols are matched greedily: an uppercase letter followed by a
lowercase letter is first tried as a two-letter symbol, and if that is not
one of the 118 known symbols the single letter is tried instead, leaving
the lowercase letter to be read as a variable. A subscript that starts
with a sign ("O+x") is read with an implicit leading 1. Counts evaluate
left to right; zero or negative totals are rejected rather than silently
dropped.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping

import numpy as np

from .ptable import ATOMIC_NUMBER, SYMBOLS


class FormulaError(ValueError):
    """Base class for every parse, substitution, or normalization failure."""


class MalformedSyntaxError(FormulaError):
    def __init__(self, raw: str, position: int, reason: str):
        super().__init__(f"{reason} at position {position} in {raw!r}")
        self.raw = raw
        self.position = position


class UnknownElementError(FormulaError):
    def __init__(self, raw: str, position: int, token: str):
        super().__init__(f"unknown element {token!r} at position {position} in {raw!r}")
        self.raw = raw
        self.position = position
        self.token = token


class UnresolvedVariableError(FormulaError):
    def __init__(self, raw: str, variables):
        names = sorted(variables)
        super().__init__(f"unresolved stoichiometry variable(s) {names} in {raw!r}")
        self.variables = tuple(names)


class MissingBindingError(FormulaError):
    def __init__(self, raw: str, variables):
        names = sorted(variables)
        super().__init__(f"no binding supplied for variable(s) {names} in {raw!r}")
        self.variables = tuple(names)


class NonPositiveCountError(FormulaError):
    def __init__(self, raw: str, symbol: str, value: float):
        super().__init__(f"element {symbol} has non-positive count {value:g} in {raw!r}")
        self.symbol = symbol
        self.value = value


class EmptyCountsError(FormulaError):
    pass


_SEPARATORS = " \t\r\n·"
_DIGITS = "0123456789"  # ASCII only; unicode "digits" like superscripts are rejected

# ---------------------------------------------------------------------------
# tokenizer

_ELEMENT = "element"
_NUMBER = "number"
_VARIABLE = "variable"
_SIGN = "sign"
_LPAREN = "lparen"
_RPAREN = "rparen"


def _tokenize(raw: str) -> Iterator[tuple[str, object, int]]:
    """Yield (kind, value, position) triples; raises on unknown characters."""
    i, n = 0, len(raw)
    while i < n:
        ch = raw[i]
        if ch in _SEPARATORS:
            i += 1
        elif ch == "(":
            yield _LPAREN, "(", i
            i += 1
        elif ch == ")":
            yield _RPAREN, ")", i
            i += 1
        elif ch in "+-":
            yield _SIGN, 1.0 if ch == "+" else -1.0, i
            i += 1
        elif ch in _DIGITS or ch == ".":
            j = i + 1
            seen_dot = ch == "."
            while j < n and (raw[j] in _DIGITS or (raw[j] == "." and not seen_dot)):
                seen_dot = seen_dot or raw[j] == "."
                j += 1
            text = raw[i:j]
            if text == ".":
                raise MalformedSyntaxError(raw, i, "stray decimal point")
            yield _NUMBER, float(text), i
            i = j
        elif ch.isupper():
            two = raw[i : i + 2]
            if len(two) == 2 and two[1].islower():
                if two in SYMBOLS:
                    yield _ELEMENT, two, i
                    i += 2
                    continue
                if ch in SYMBOLS:
                    yield _ELEMENT, ch, i
                    i += 1
                    continue
                raise UnknownElementError(raw, i, two)
            if ch in SYMBOLS:
                yield _ELEMENT, ch, i
                i += 1
                continue
            raise UnknownElementError(raw, i, ch)
        elif ch.isalpha():
            yield _VARIABLE, ch, i
            i += 1
        else:
            raise MalformedSyntaxError(raw, i, f"unexpected character {ch!r}")


# ---------------------------------------------------------------------------
# parser
#
# Subscripts are kept symbolic as (constant, {variable: coefficient}) pairs so
# that the same tree serves parse_formula, substitute_variables, and variable
# detection. The tree itself is a list of ("element", symbol, expr) and
# ("group", children, expr) nodes, expr being None for an implicit 1.


class _Parser:
    def __init__(self, raw: str):
        self.raw = raw
        self.tokens = list(_tokenize(raw))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None, len(self.raw))

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse(self) -> list:
        items = self.parse_items(top=True)
        kind, _, at = self.peek()
        if kind is not None:
            raise MalformedSyntaxError(self.raw, at, "unmatched ')'")
        return items

    def parse_items(self, top: bool) -> list:
        items = []
        while True:
            kind, value, at = self.peek()
            if kind == _ELEMENT:
                self.take()
                items.append(("element", value, self.parse_subscript()))
            elif kind == _LPAREN:
                self.take()
                children = self.parse_items(top=False)
                kind2, _, at2 = self.peek()
                if kind2 != _RPAREN:
                    raise MalformedSyntaxError(self.raw, at, "unclosed '('")
                self.take()
                items.append(("group", children, self.parse_subscript()))
            elif kind == _RPAREN and not top:
                break
            elif kind is None:
                break
            else:
                raise MalformedSyntaxError(
                    self.raw, at, "expected an element symbol or '('"
                )
        if not items:
            _, _, at = self.peek()
            raise MalformedSyntaxError(self.raw, at, "empty formula or group")
        return items

    def parse_subscript(self):
        """Parse (constant, {var: coeff}) or return None when absent."""
        kind, value, _ = self.peek()
        if kind == _NUMBER:
            self.take()
            const, coeffs = float(value), {}
        elif kind == _VARIABLE:
            self.take()
            const, coeffs = 0.0, {value: 1.0}
        elif kind == _SIGN:
            const, coeffs = 1.0, {}  # "O+x" means a base count of 1
        else:
            return None
        while True:
            kind, sign, _ = self.peek()
            if kind != _SIGN:
                return const, coeffs
            self.take()
            kind, value, at = self.take()
            if kind == _NUMBER:
                const += sign * float(value)
            elif kind == _VARIABLE or (kind == _ELEMENT and len(value) == 1):
                # a bare letter after a sign is stoichiometric, never an element
                coeffs[value] = coeffs.get(value, 0.0) + sign
            else:
                raise MalformedSyntaxError(
                    self.raw, at, "expected a number or variable after sign"
                )


def _walk_variables(items) -> set:
    seen = set()
    for node in items:
        if node[0] == "element":
            expr = node[2]
        else:
            seen |= _walk_variables(node[1])
            expr = node[2]
        if expr is not None:
            seen.update(expr[1])
    return seen


def _evaluate(items, raw, bindings, counts, multiplier=1.0) -> None:
    for node in items:
        expr = node[2]
        if expr is None:
            value = 1.0
        else:
            const, coeffs = expr
            value = const + sum(c * bindings[v] for v, c in coeffs.items())
        if node[0] == "element":
            symbol = node[1]
            total = value * multiplier
            if total <= 0.0:
                raise NonPositiveCountError(raw, symbol, total)
            counts[symbol] = counts.get(symbol, 0.0) + total
        else:
            if value <= 0.0:
                raise NonPositiveCountError(raw, "(group)", value)
            _evaluate(node[1], raw, bindings, counts, multiplier * value)


def parse_formula(raw: str) -> dict[str, float]:
    """Parse a concrete formula into {symbol: count}.

    Counts are un-normalized ("H2O" -> {"H": 2.0, "O": 1.0}); repeated
    mentions of an element accumulate. Formulas still carrying stoichiometry
    variables raise UnresolvedVariableError - substitute first.
    """
    tree = _Parser(raw).parse()
    variables = _walk_variables(tree)
    if variables:
        raise UnresolvedVariableError(raw, variables)
    counts: dict[str, float] = {}
    _evaluate(tree, raw, {}, counts)
    return counts


def has_unresolved_variables(raw: str) -> bool:
    """True when the string contains a symbolic stoichiometry variable.

    Works lexically so it never raises: malformed strings report whether a
    variable token appears anywhere in them.
    """
    tokens = []
    gen = _tokenize(raw)
    while True:
        try:
            tokens.append(next(gen))
        except StopIteration:
            break
        except FormulaError:
            break  # scan whatever prefix tokenized cleanly
    prev_kind = None
    for kind, value, _ in tokens:
        if kind == _VARIABLE:
            return True
        if kind == _ELEMENT and len(value) == 1 and prev_kind == _SIGN:
            return True
        prev_kind = kind
    return False


def _format_count(value: float) -> str:
    """Shortest exact decimal for a count; integers print without a point.

    Positional notation only - the grammar has no exponent form - and unique
    round-trip, so float(_format_count(v)) == v.
    """
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return np.format_float_positional(value, unique=True, trim="-")


def _serialize(items) -> str:
    parts = []
    for node in items:
        expr = node[2]
        if node[0] == "element":
            parts.append(node[1])
        else:
            parts.append("(" + _serialize(node[1]) + ")")
        if expr is not None:
            const, coeffs = expr
            if coeffs:
                raise AssertionError("serialize called with unresolved variables")
            parts.append(_format_count(const))
    return "".join(parts)


def substitute_variables(raw: str, bindings: Mapping[str, float]) -> str:
    """Replace every stoichiometry variable with its bound value.

    The structure of the formula is preserved ("FeSe1-x" with x=0 becomes
    "FeSe1", not "FeSe"); only subscript expressions are evaluated. Missing
    bindings raise MissingBindingError; a substitution that drives any
    element count or group multiplier to zero or below raises
    NonPositiveCountError.
    """
    tree = _Parser(raw).parse()
    variables = _walk_variables(tree)
    missing = variables - set(bindings)
    if missing:
        raise MissingBindingError(raw, missing)

    def resolve(items):
        out = []
        for node in items:
            expr = node[2]
            if expr is not None:
                const, coeffs = expr
                value = const + sum(c * float(bindings[v]) for v, c in coeffs.items())
                expr = (value, {})
            if node[0] == "element":
                out.append(("element", node[1], expr))
            else:
                out.append(("group", resolve(node[1]), expr))
        return out

    resolved = resolve(tree)
    # evaluate to surface non-positive totals before serializing
    _evaluate(resolved, raw, {}, {})
    return _serialize(resolved)


class Composition(Mapping):
    """An immutable normalized composition: molar fractions that sum to 1.

    Iteration order is by atomic number, which also fixes the canonical
    formula string used for hashing and exact-identity checks.
    """

    __slots__ = ("_fractions", "_formula")

    def __init__(self, fractions: Mapping[str, float]):
        if not fractions:
            raise EmptyCountsError("a composition needs at least one element")
        items = []
        for symbol, fraction in fractions.items():
            if symbol not in ATOMIC_NUMBER:
                raise UnknownElementError(str(symbol), 0, str(symbol))
            f = float(fraction)
            if not math.isfinite(f) or f <= 0.0:
                raise NonPositiveCountError(str(symbol), symbol, f)
            items.append((symbol, f))
        total = math.fsum(f for _, f in items)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {total!r}, not 1")
        items.sort(key=lambda kv: ATOMIC_NUMBER[kv[0]])
        object.__setattr__(self, "_fractions", dict(items))
        object.__setattr__(self, "_formula", None)

    def __setattr__(self, name, value):
        raise AttributeError("Composition is immutable")

    def __getitem__(self, symbol: str) -> float:
        return self._fractions[symbol]

    def __iter__(self):
        return iter(self._fractions)

    def __len__(self) -> int:
        return len(self._fractions)

    def __repr__(self) -> str:
        return f"Composition({self.formula()!r})"

    def __eq__(self, other) -> bool:
        if isinstance(other, Composition):
            return self._fractions == other._fractions
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._fractions.items()))

    @property
    def elements(self) -> tuple[str, ...]:
        """Symbols in atomic-number order."""
        return tuple(self._fractions)

    def formula(self) -> str:
        """Canonical formula: atomic-number order, shortest exact fractions.

        Parsing the result and renormalizing recovers the same fractions to
        within a few ulps, so the string doubles as an identity key.
        """
        cached = self._formula
        if cached is None:
            parts = []
            for symbol, fraction in self._fractions.items():
                if len(self._fractions) == 1:
                    parts.append(symbol)
                else:
                    parts.append(symbol + _format_count(fraction))
            cached = "".join(parts)
            object.__setattr__(self, "_formula", cached)
        return cached

    def almost_equal(self, other: "Composition", tol: float = 1e-6) -> bool:
        """Same element set with every fraction within tol."""
        if set(self._fractions) != set(other._fractions):
            return False
        return all(
            abs(f - other._fractions[s]) <= tol for s, f in self._fractions.items()
        )


def normalize(counts: Mapping[str, float]) -> Composition:
    """Scale raw counts to molar fractions."""
    if not counts:
        raise EmptyCountsError("cannot normalize an empty count map")
    total = math.fsum(float(v) for v in counts.values())
    for symbol, value in counts.items():
        if not math.isfinite(float(value)) or float(value) <= 0.0:
            raise NonPositiveCountError(str(dict(counts)), symbol, float(value))
    return Composition({s: float(v) / total for s, v in counts.items()})


def parse_composition(raw: str) -> Composition:
    """parse_formula followed by normalize; the one-call path used everywhere."""
    return normalize(parse_formula(raw))
