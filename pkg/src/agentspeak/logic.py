"""Substitutions, most general unifiers and annotation-aware logical consequence.

A substitution is a plain ``dict`` from variable name to term.  Functions
that can fail to unify return ``None``.
"""

from __future__ import annotations

from typing import Iterable, Iterator

from .syntax import (
    Action,
    AchieveGoal,
    AddBeliefUpdate,
    Atom,
    AtomLike,
    AtomVar,
    Constant,
    Context,
    DelBeliefUpdate,
    Literal,
    Plan,
    SendAction,
    Structure,
    Term,
    TestGoal,
    TriggeringEvent,
    Variable,
    render_term,
    term_to_atom,
    var_names,
)

Substitution = dict[str, Term]


def apply(subst: Substitution, target):
    """Apply ``subst`` to any syntax node; bound atom variables become atoms."""
    if not subst:
        return target
    if isinstance(target, Variable):
        return subst.get(target.name, target)
    if isinstance(target, Constant):
        return target
    if isinstance(target, Structure):
        return Structure(target.functor, tuple(apply(subst, a) for a in target.args))
    if isinstance(target, Atom):
        return Atom(
            target.functor,
            tuple(apply(subst, a) for a in target.args),
            frozenset(apply(subst, a) for a in target.annotations),
        )
    if isinstance(target, AtomVar):
        annotations = frozenset(apply(subst, a) for a in target.annotations)
        value = apply(subst, target.var)
        return term_to_atom(value, annotations)
    if isinstance(target, TriggeringEvent):
        return TriggeringEvent(target.op, apply(subst, target.atom))
    if isinstance(target, Literal):
        return Literal(apply(subst, target.atom), target.negated)
    if isinstance(target, (Action, AchieveGoal, TestGoal, AddBeliefUpdate, DelBeliefUpdate)):
        return type(target)(apply(subst, target.atom))
    if isinstance(target, SendAction):
        return SendAction(apply(subst, target.receiver), target.ilf, apply(subst, target.content))
    if isinstance(target, Plan):
        return Plan(
            apply(subst, target.trigger),
            tuple(apply(subst, lit) for lit in target.context),
            tuple(apply(subst, f) for f in target.body),
        )
    if isinstance(target, tuple):
        return tuple(apply(subst, x) for x in target)
    if isinstance(target, frozenset):
        return frozenset(apply(subst, x) for x in target)
    raise TypeError(f"cannot apply a substitution to {type(target).__name__}")


def compose(outer: Substitution, inner: Substitution) -> Substitution:
    """Return the substitution equivalent to applying ``inner`` then ``outer``."""
    result: Substitution = {}
    for name, value in inner.items():
        value = apply(outer, value)
        if value != Variable(name):
            result[name] = value
    for name, value in outer.items():
        if name not in inner:
            result[name] = value
    return result


def occurs(name: str, term: Term) -> bool:
    if isinstance(term, Variable):
        return term.name == name
    if isinstance(term, Structure):
        return any(occurs(name, a) for a in term.args)
    return False


def walk(term: Term, subst: Substitution) -> Term:
    while isinstance(term, Variable) and term.name in subst:
        term = subst[term.name]
    return term


def unify_terms(a: Term, b: Term, subst: Substitution) -> Substitution | None:
    """Extend ``subst`` (triangular form, not mutated) so that ``a`` and ``b`` unify."""
    a = walk(a, subst)
    b = walk(b, subst)
    if a == b:
        return subst
    if isinstance(a, Variable):
        if occurs(a.name, apply(subst, b)):
            return None
        return {**subst, a.name: b}
    if isinstance(b, Variable):
        if occurs(b.name, apply(subst, a)):
            return None
        return {**subst, b.name: a}
    if isinstance(a, Structure) and isinstance(b, Structure):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        for x, y in zip(a.args, b.args):
            subst = unify_terms(x, y, subst)
            if subst is None:
                return None
        return subst
    return None


def resolve(subst: Substitution) -> Substitution:
    """Turn a triangular substitution into an idempotent one."""
    out: Substitution = {}
    for name in subst:
        value = _resolve_term(subst[name], subst)
        if value != Variable(name):
            out[name] = value
    return out


def _resolve_term(term: Term, subst: Substitution) -> Term:
    term = walk(term, subst)
    if isinstance(term, Structure):
        return Structure(term.functor, tuple(_resolve_term(a, subst) for a in term.args))
    return term


def _atom_term(a: AtomLike) -> Term:
    return a.var if isinstance(a, AtomVar) else a.as_term()


def mgu(a: AtomLike, b: AtomLike) -> Substitution | None:
    """Most general unifier of two atoms' predicates; annotations are ignored.

    When two variables meet, the variable of ``a`` is bound to that of ``b``.
    """
    s = _unify_atoms(a, b, {})
    return None if s is None else resolve(s)


def _unify_atoms(a: AtomLike, b: AtomLike, subst: Substitution) -> Substitution | None:
    if isinstance(a, Atom) and isinstance(b, Atom):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return None
        for x, y in zip(a.args, b.args):
            subst = unify_terms(x, y, subst)
            if subst is None:
                return None
        return subst
    return unify_terms(_atom_term(a), _atom_term(b), subst)


def _match_annotations(
    wanted: list[Term], available: tuple[Term, ...], subst: Substitution
) -> Iterator[Substitution]:
    # every wanted source must unify with some available source
    if not wanted:
        yield subst
        return
    first, rest = wanted[0], wanted[1:]
    for src in available:
        s = unify_terms(first, src, subst)
        if s is not None:
            yield from _match_annotations(rest, available, s)


def _dedupe(substs: Iterable[Substitution]) -> list[Substitution]:
    seen: set = set()
    out: list[Substitution] = []
    for s in substs:
        key = tuple(sorted((k, render_term(v)) for k, v in s.items()))
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


def _entails_one(b: Atom, query: AtomLike, subst: Substitution) -> Iterator[Substitution]:
    s = _unify_atoms(query, b, subst)
    if s is None:
        return
    wanted = sorted(query.annotations, key=render_term)
    available = tuple(sorted(b.annotations, key=render_term))
    yield from _match_annotations(wanted, available, s)


def _restricted(subst: Substitution, names: set[str]) -> Substitution:
    full = resolve(subst)
    return {k: v for k, v in full.items() if k in names}


def entails(bs: Iterable[Atom], query: AtomLike) -> list[Substitution]:
    """All substitutions under which ``query`` follows from the ground base ``bs``."""
    names = var_names(query)
    return _dedupe(
        _restricted(s, names) for b in _ordered(bs) for s in _entails_one(b, query, {})
    )


def _ordered(bs: Iterable[Atom]) -> Iterable[Atom]:
    ordered = getattr(bs, "ordered", None)
    return ordered() if ordered is not None else bs


def test(bs: Iterable[Atom], at: AtomLike) -> list[Substitution]:
    """The Test function used by test goals, Untell and AskAll; same as :func:`entails`."""
    return entails(bs, at)


test.__test__ = False  # not a pytest test


def entails_context(bs: Iterable[Atom], ctx: Context, subst: Substitution | None = None) -> list[Substitution]:
    """Substitutions making the conjunction ``ctx`` a consequence of ``bs``.

    Positive literals are solved left to right; negative literals are checked
    afterwards against each candidate (negation as failure).
    """
    base = list(_ordered(bs))
    start = dict(subst or {})
    positives = [lit for lit in ctx if not lit.negated]
    negatives = [lit for lit in ctx if lit.negated]
    names = var_names(ctx) | set(start)

    def solve_all(i: int, s: Substitution) -> Iterator[Substitution]:
        if i == len(positives):
            yield s
            return
        query = apply(resolve(s), positives[i].atom)
        for b in base:
            for s2 in _entails_one(b, query, s):
                yield from solve_all(i + 1, s2)

    results = []
    for s in solve_all(0, start):
        full = resolve(s)
        if any(entails(base, apply(full, lit.atom)) for lit in negatives):
            continue
        results.append({k: v for k, v in full.items() if k in names})
    return _dedupe(results)


def te_entails(occurred: TriggeringEvent, pattern: TriggeringEvent) -> Substitution | None:
    """First substitution under which the event ``occurred`` matches ``pattern``."""
    if occurred.op != pattern.op:
        return None
    occ = occurred.atom
    if isinstance(occ, AtomVar):
        return None
    for s in _entails_one(occ, pattern.atom, {}):
        return resolve(s)
    return None
