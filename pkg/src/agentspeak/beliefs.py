"""The belief base: ground atoms keyed by predicate, one merged annotation set each."""

from __future__ import annotations

from typing import Iterable, Iterator

from .syntax import Atom, Term, is_ground, render_atom


class BeliefBase:
    """Immutable set of ground annotated atoms.

    ``add`` merges source annotations into an existing entry; ``delete``
    strips sources and drops the entry once none remain.
    """

    __slots__ = ("_entries", "_ordered")

    def __init__(self, atoms: Iterable[Atom] = ()):
        entries: dict[tuple, frozenset[Term]] = {}
        for a in atoms:
            _check(a)
            key = a.predicate()
            entries[key] = entries.get(key, frozenset()) | a.annotations
        self._entries = entries
        self._ordered: tuple[Atom, ...] | None = None

    @classmethod
    def _from_entries(cls, entries: dict[tuple, frozenset[Term]]) -> BeliefBase:
        bb = cls.__new__(cls)
        bb._entries = entries
        bb._ordered = None
        return bb

    def add(self, b: Atom) -> BeliefBase:
        _check(b)
        key = b.predicate()
        current = self._entries.get(key, frozenset())
        merged = current | b.annotations
        if merged == current and key in self._entries:
            return self
        entries = dict(self._entries)
        entries[key] = merged
        return self._from_entries(entries)

    def delete(self, b: Atom) -> BeliefBase:
        if not is_ground(b):
            raise ValueError(f"cannot delete non-ground belief {render_atom(b)}")
        key = b.predicate()
        current = self._entries.get(key)
        if current is None:
            return self
        remaining = current - b.annotations
        if remaining == current:
            return self
        entries = dict(self._entries)
        if remaining:
            entries[key] = remaining
        else:
            del entries[key]
        return self._from_entries(entries)

    def ordered(self) -> tuple[Atom, ...]:
        """Atoms in lexicographic order of their rendered form."""
        if self._ordered is None:
            atoms = [Atom(f, args, anns) for (f, args), anns in self._entries.items()]
            self._ordered = tuple(sorted(atoms, key=render_atom))
        return self._ordered

    def annotations_of(self, functor: str, args: tuple = ()) -> frozenset[Term]:
        return self._entries.get((functor, tuple(args)), frozenset())

    def snapshot(self) -> list[str]:
        return [render_atom(a) for a in self.ordered()]

    def __iter__(self) -> Iterator[Atom]:
        return iter(self.ordered())

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, b: object) -> bool:
        if not isinstance(b, Atom):
            return False
        anns = self._entries.get(b.predicate())
        return anns is not None and b.annotations <= anns

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BeliefBase) and self._entries == other._entries

    def __hash__(self) -> int:
        return hash(frozenset(self._entries.items()))

    def __repr__(self) -> str:
        return "BeliefBase({" + ", ".join(self.snapshot()) + "})"


def _check(b: Atom) -> None:
    if not isinstance(b, Atom) or not is_ground(b):
        raise ValueError(f"beliefs must be ground atoms, got {b!r}")
    if not b.annotations:
        raise ValueError(f"belief {render_atom(b)} has no source annotation")


def add(bs: BeliefBase, b: Atom) -> BeliefBase:
    return bs.add(b)


def delete(bs: BeliefBase, b: Atom) -> BeliefBase:
    return bs.delete(b)
