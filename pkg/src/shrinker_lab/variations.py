"""Variation specs for the command line.

Grammar (whitespace ignored)::

    variation := "form:" coeffs | "function:" trig | "meanCurvature"
    coeffs    := number ("," number)*              one coefficient per parameter
    trig      := term (("+" | "-") term)*
    term      := number | [number ["*"]] ("cos" | "sin") "(" lin ")"
    lin       := [sign] mono ((sign) mono)*
    mono      := [integer ["*"]] "t" index          index is 1-based

A ``form:`` spec is the closed form sum_a c_a dtheta^a; a ``function:`` spec is
a Hamiltonian potential u, i.e. the exact form du.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)|(cos|sin)|t(\d+)|([-+*(),]))")


class VariationParseError(ValueError):
    pass


@dataclass(frozen=True)
class TrigTerm:
    coeff: float
    func: str                  # "cos", "sin" or "const"
    freqs: tuple[int, ...]     # integer multipliers of t1..tk


@dataclass(frozen=True)
class VariationSpec:
    kind: str                  # "form", "function" or "meanCurvature"
    coeffs: tuple[float, ...] = ()
    terms: tuple[TrigTerm, ...] = ()

    def potential(self, mesh) -> np.ndarray:
        """Evaluate the trig polynomial on a parameter mesh (list of coordinate arrays)."""
        u = np.zeros(np.shape(mesh[0]))
        for t in self.terms:
            if t.func == "const":
                u = u + t.coeff
                continue
            if len(t.freqs) > len(mesh):
                raise VariationParseError(f"expression uses t{len(t.freqs)} but the model has {len(mesh)} parameters")
            phase = sum(m * th for m, th in zip(t.freqs, mesh))
            u = u + t.coeff * (np.cos(phase) if t.func == "cos" else np.sin(phase))
        return u


def _tokens(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise VariationParseError(f"unexpected character at {pos}: {text[pos:]!r}")
        num, fn, var, op = m.groups()
        if num is not None:
            out.append(("num", num))
        elif fn is not None:
            out.append(("fn", fn))
        elif var is not None:
            out.append(("var", var))
        else:
            out.append(("op", op))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else ("end", "")

    def take(self, kind=None, value=None):
        tok = self.peek()
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise VariationParseError(f"expected {value or kind}, found {tok[1] or 'end of input'!r}")
        self.i += 1
        return tok

    def sign(self) -> float:
        s = 1.0
        while self.peek() in (("op", "+"), ("op", "-")):
            if self.take()[1] == "-":
                s = -s
        return s

    def expr(self) -> list[TrigTerm]:
        terms = [self.term(self.sign())]
        while self.peek() in (("op", "+"), ("op", "-")):
            terms.append(self.term(self.sign()))
        if self.peek()[0] != "end":
            raise VariationParseError(f"trailing input at {self.peek()[1]!r}")
        return terms

    def term(self, s: float) -> TrigTerm:
        c = s
        if self.peek()[0] == "num":
            c *= float(self.take()[1])
            if self.peek() == ("op", "*"):
                self.take()
            elif self.peek()[0] != "fn":
                return TrigTerm(c, "const", ())
        fn = self.take("fn")[1]
        self.take("op", "(")
        freqs = self.lin()
        self.take("op", ")")
        return TrigTerm(c, fn, freqs)

    def lin(self) -> tuple[int, ...]:
        acc: dict[int, int] = {}
        while True:
            s = int(self.sign())
            m = 1
            if self.peek()[0] == "num":
                txt = self.take()[1]
                if not txt.isdigit():
                    raise VariationParseError(f"frequency must be an integer, got {txt!r}")
                m = int(txt)
                if self.peek() == ("op", "*"):
                    self.take()
            idx = int(self.take("var")[1])
            if idx < 1:
                raise VariationParseError("parameters are numbered from t1")
            acc[idx] = acc.get(idx, 0) + s * m
            if self.peek() not in (("op", "+"), ("op", "-")):
                break
        k = max(acc)
        return tuple(acc.get(i, 0) for i in range(1, k + 1))


def parse_trig(text: str) -> tuple[TrigTerm, ...]:
    if not text.strip():
        raise VariationParseError("empty expression")
    return tuple(_Parser(text).expr())


def parse_variation(text: str) -> VariationSpec:
    text = text.strip()
    if text == "meanCurvature":
        return VariationSpec("meanCurvature")
    kind, sep, body = text.partition(":")
    if not sep:
        raise VariationParseError(f"variation must be form:..., function:... or meanCurvature, got {text!r}")
    body = body.strip().strip("\"'")
    if kind == "form":
        try:
            coeffs = tuple(float(c) for c in body.split(","))
        except ValueError as exc:
            raise VariationParseError(f"bad form coefficients {body!r}") from exc
        if not coeffs or not all(np.isfinite(coeffs)):
            raise VariationParseError(f"bad form coefficients {body!r}")
        return VariationSpec("form", coeffs=coeffs)
    if kind == "function":
        return VariationSpec("function", terms=parse_trig(body))
    raise VariationParseError(f"unknown variation kind {kind!r}")
