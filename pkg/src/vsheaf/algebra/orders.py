"""Monomial orders as sort keys on exponent tuples."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

Exponents = Tuple[int, ...]

KINDS = ("lex", "grlex", "grevlex", "elim")


@dataclass(frozen=True)
class MonomialOrder:
    """A term order on monomials in ``nvars`` variables.

    ``perm`` lists variable indices from most to least significant.  For
    ``elim`` the first ``split`` entries of ``perm`` form the eliminated
    block: any monomial involving them beats every monomial that does not.
    Both blocks are compared by grevlex.
    """

    kind: str
    nvars: int
    perm: Optional[Tuple[int, ...]] = None
    split: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown monomial order {self.kind!r}")
        if self.perm is None:
            object.__setattr__(self, "perm", tuple(range(self.nvars)))
        if sorted(self.perm) != list(range(self.nvars)):
            raise ValueError("perm must be a permutation of the variable indices")
        if self.kind == "elim" and not 0 <= self.split <= self.nvars:
            raise ValueError("split index out of range")

    def key_function(self) -> Callable[[Exponents], tuple]:
        """Return a memoised key: larger key means larger monomial."""
        perm = self.perm
        rev = tuple(reversed(perm))
        if self.kind == "lex":
            def raw(e):
                return tuple(e[i] for i in perm)
        elif self.kind == "grlex":
            def raw(e):
                return (sum(e), tuple(e[i] for i in perm))
        elif self.kind == "grevlex":
            def raw(e):
                return (sum(e), tuple(-e[i] for i in rev))
        else:
            first = perm[: self.split]
            second = perm[self.split:]
            rfirst = tuple(reversed(first))
            rsecond = tuple(reversed(second))

            def raw(e):
                return (
                    sum(e[i] for i in first),
                    tuple(-e[i] for i in rfirst),
                    sum(e[i] for i in second),
                    tuple(-e[i] for i in rsecond),
                )
        cache = {}

        def key(e):
            k = cache.get(e)
            if k is None:
                k = cache[e] = raw(e)
            return k

        return key

    def compare(self, a: Exponents, b: Exponents) -> int:
        key = self.key_function()
        ka, kb = key(a), key(b)
        return (ka > kb) - (ka < kb)

    def extend(self, extra_front: int = 0, extra_back: int = 0) -> "MonomialOrder":
        """Same kind of order on a ring with fresh variables added.

        Fresh front variables become the most significant ones; fresh back
        variables the least significant.  Elimination blocks shift along.
        """
        n = self.nvars + extra_front + extra_back
        shifted = tuple(i + extra_front for i in self.perm)
        perm = tuple(range(extra_front)) + shifted + tuple(
            range(extra_front + self.nvars, n))
        split = self.split + extra_front if self.kind == "elim" else 0
        return MonomialOrder(self.kind, n, perm, split)


def elimination_order(nvars: int, eliminate, keep_perm=None) -> MonomialOrder:
    """Block order eliminating the variable indices in ``eliminate``."""
    eliminate = tuple(eliminate)
    rest = tuple(i for i in (keep_perm or range(nvars)) if i not in eliminate)
    return MonomialOrder("elim", nvars, eliminate + rest, len(eliminate))
