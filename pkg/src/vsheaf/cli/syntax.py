"""Block syntax of workspace files.

    name kind { key = value; key = [a, b, [c, d]]; }

Values are atoms (raw text up to the next top-level ``,``, ``;`` or ``]``)
or bracketed lists of values.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, Union

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")


class InputError(Exception):
    def __init__(self, message, line=0, col=0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def __str__(self):
        if self.line:
            return f"line {self.line}, column {self.col}: {self.message}"
        return self.message


@dataclass
class Atom:
    text: str
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, Atom) and self.text == other.text


@dataclass
class ListValue:
    items: List["Value"]
    line: int = 0
    col: int = 0

    def __eq__(self, other):
        return isinstance(other, ListValue) and self.items == other.items


Value = Union[Atom, ListValue]


@dataclass
class Entry:
    key: str
    value: Value
    line: int
    col: int


@dataclass
class Block:
    name: str
    kind: str
    entries: List[Entry] = field(default_factory=list)
    line: int = 0
    col: int = 0

    def get(self, key):
        for e in self.entries:
            if e.key == key:
                return e
        return None


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def _advance(self, n=1):
        for _ in range(n):
            if self.text[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    def skip(self):
        while self.i < len(self.text):
            c = self.text[self.i]
            if c == "#":
                while self.i < len(self.text) and self.text[self.i] != "\n":
                    self._advance()
            elif c.isspace():
                self._advance()
            else:
                break

    def at_end(self):
        self.skip()
        return self.i >= len(self.text)

    def peek(self):
        self.skip()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch):
        if self.peek() != ch:
            got = self.peek() or "end of input"
            raise InputError(f"expected {ch!r}, found {got!r}", self.line, self.col)
        self._advance()

    def ident(self, what):
        self.skip()
        m = _IDENT.match(self.text, self.i)
        if not m:
            got = self.text[self.i:self.i + 1] or "end of input"
            raise InputError(f"expected {what}, found {got!r}", self.line, self.col)
        pos = (self.line, self.col)
        self._advance(len(m.group()))
        return m.group(), pos

    def value(self) -> Value:
        self.skip()
        line, col = self.line, self.col
        if self.peek() == "[":
            self._advance()
            items = []
            if self.peek() == "]":
                self._advance()
                return ListValue(items, line, col)
            while True:
                items.append(self.value())
                c = self.peek()
                if c == ",":
                    self._advance()
                elif c == "]":
                    self._advance()
                    return ListValue(items, line, col)
                else:
                    raise InputError(f"expected ',' or ']', found {c or 'end of input'!r}",
                                     self.line, self.col)
        depth = 0
        start = self.i
        while self.i < len(self.text):
            c = self.text[self.i]
            if c == "(":
                depth += 1
            elif c == ")":
                depth -= 1
                if depth < 0:
                    raise InputError("unbalanced ')'", self.line, self.col)
            elif depth == 0 and c in ",;]":
                break
            elif c in "[{}#\n":
                break
            self._advance()
        raw = " ".join(self.text[start:self.i].split())
        if depth:
            raise InputError("unbalanced '('", line, col)
        if not raw:
            raise InputError("missing value", line, col)
        return Atom(raw, line, col)


def parse_text(text: str) -> List[Block]:
    sc = _Scanner(text)
    blocks: List[Block] = []
    seen = {}
    while not sc.at_end():
        name, (line, col) = sc.ident("a block name")
        if name in seen:
            raise InputError(f"duplicate name {name!r} (first defined on line {seen[name]})",
                             line, col)
        seen[name] = line
        kind, _ = sc.ident("a block kind")
        sc.expect("{")
        block = Block(name, kind, [], line, col)
        keys = set()
        while sc.peek() != "}":
            if not sc.peek():
                raise InputError(f"block {name!r} is not closed", line, col)
            key, (kl, kc) = sc.ident("a key")
            if key in keys:
                raise InputError(f"duplicate key {key!r} in block {name!r}", kl, kc)
            keys.add(key)
            sc.expect("=")
            val = sc.value()
            sc.expect(";")
            block.entries.append(Entry(key, val, kl, kc))
        sc.expect("}")
        blocks.append(block)
    return blocks


def format_value(v: Value) -> str:
    if isinstance(v, Atom):
        return v.text
    return "[" + ", ".join(format_value(x) for x in v.items) + "]"


def dump_blocks(blocks: List[Block]) -> str:
    out = []
    for b in blocks:
        out.append(f"{b.name} {b.kind} {{")
        for e in b.entries:
            out.append(f"  {e.key} = {format_value(e.value)};")
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")
