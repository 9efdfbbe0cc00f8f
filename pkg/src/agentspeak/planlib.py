"""Plan library operations: relevant and applicable plans, tellHow/untellHow updates."""

from __future__ import annotations

from typing import Iterable

from .beliefs import BeliefBase
from .logic import Substitution, apply, compose, entails_context, te_entails
from .syntax import Plan, TriggeringEvent, Variable, iter_vars, var_names

PlanLibrary = tuple[Plan, ...]
Option = tuple[Plan, Substitution]


def standardize_apart(plan: Plan, avoid: set[str]) -> Plan:
    """Rename the plan's variables that clash with ``avoid``; others keep their names."""
    names = var_names(plan)
    clashes = sorted(names & avoid)
    if not clashes:
        return plan
    taken = names | avoid
    renaming: Substitution = {}
    for name in clashes:
        k = 1
        while f"{name}_{k}" in taken:
            k += 1
        fresh = f"{name}_{k}"
        taken.add(fresh)
        renaming[name] = Variable(fresh)
    return apply(renaming, plan)


def relevant_with_index(
    ps: PlanLibrary, te: TriggeringEvent, avoid: set[str] | None = None
) -> list[tuple[int, Plan, Substitution]]:
    avoid = set(avoid or ()) | var_names(te)
    out = []
    for index, plan in enumerate(ps):
        if plan.trigger.op != te.op:
            continue
        copy = standardize_apart(plan, avoid)
        theta = te_entails(te, copy.trigger)
        if theta is not None:
            out.append((index, copy, theta))
    return out


def relevant_plans(ps: PlanLibrary, te: TriggeringEvent, avoid: set[str] | None = None) -> list[Option]:
    """Plans whose trigger the event entails, each standardized apart from ``avoid``."""
    return [(p, theta) for _, p, theta in relevant_with_index(ps, te, avoid)]


def applicable_plans(bs: BeliefBase, rel: Iterable[Option]) -> list[Option]:
    out = []
    for plan, theta in rel:
        ctx = apply(theta, plan.context)
        for inner in entails_context(bs, ctx):
            out.append((plan, compose(inner, theta)))
    return out


def canonical(plan: Plan) -> Plan:
    """Rename variables by order of first occurrence, for alpha-equivalence."""
    renaming: Substitution = {}
    for v in iter_vars(plan):
        if v.name not in renaming:
            renaming[v.name] = Variable(f"_V{len(renaming)}")
    return apply(renaming, plan)


def same_plan(a: Plan, b: Plan) -> bool:
    return canonical(a) == canonical(b)


def add_plans(ps: PlanLibrary, new: Iterable[Plan]) -> PlanLibrary:
    seen = {canonical(p) for p in ps}
    out = list(ps)
    for p in new:
        c = canonical(p)
        if c not in seen:
            seen.add(c)
            out.append(p)
    return tuple(out)


def remove_plans(ps: PlanLibrary, gone: Iterable[Plan]) -> PlanLibrary:
    doomed = {canonical(p) for p in gone}
    return tuple(p for p in ps if canonical(p) not in doomed)
