from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from agentspeak.beliefs import BeliefBase
from agentspeak.logic import apply, compose, entails, entails_context, mgu, te_entails, test
from agentspeak.syntax import (
    Atom,
    Constant,
    Structure,
    Variable,
    parse_atom,
    parse_context,
    parse_plan,
    parse_term,
    parse_trigger,
)

from oracles import as_set, brute_context, brute_entails, random_belief_base, random_query

V, C = Variable, Constant


def a(text: str) -> Atom:
    return parse_atom(text)


def bs(*texts: str) -> BeliefBase:
    atoms = [a(t) for t in texts]
    return BeliefBase(x if x.annotations else x.with_annotations({C("self")}) for x in atoms)


class TestApply:
    def test_firefighter_binding(self):
        assert apply({"D": C("south")}, a("spreading(D)")) == a("spreading(south)")

    def test_empty_is_identity(self):
        p = parse_plan("+!g(X) : p(X) <- .send(X, tell, q(X)).")
        assert apply({}, p) is p

    def test_fight_post(self):
        assert apply({"A": C("r3"), "D": C("south")}, a("fight_post(A,D)")) == a("fight_post(r3,south)")

    def test_annotations_substituted(self):
        assert apply({"A": C("ag2")}, a("p[A]")) == a("p[ag2]")

    def test_atom_variable_becomes_atom(self):
        plan = parse_plan("+!r(P) : true <- +P.")
        body = apply({"P": parse_term("b(c)")}, plan.body)
        assert body[0].atom == a("b(c)")

    def test_simultaneous(self):
        assert apply({"X": V("Y"), "Y": C("a")}, parse_term("f(X,Y)")) == parse_term("f(Y,a)")


class TestCompose:
    def test_identity(self):
        theta = {"D": C("south")}
        assert compose({}, theta) == theta

    def test_firefighter_first_cycle(self):
        theta = compose({"R": C("r2")}, {"D": C("south")})
        assert apply(theta, parse_term("pair(D,R)")) == parse_term("pair(south,r2)")

    def test_inner_bindings_rewritten(self):
        theta = compose({"Y": C("a")}, {"X": parse_term("f(Y)")})
        assert theta == {"X": parse_term("f(a)"), "Y": C("a")}


terms = st.recursive(
    st.one_of(st.sampled_from(["X", "Y", "Z"]).map(V), st.sampled_from(["a", "b"]).map(C)),
    lambda inner: st.builds(lambda xs: Structure("f", tuple(xs)), st.lists(inner, min_size=1, max_size=2)),
    max_leaves=5,
)
substs = st.dictionaries(st.sampled_from(["X", "Y", "Z"]), terms, max_size=3)


@settings(max_examples=300, deadline=None)
@given(substs, substs, terms)
def test_compose_law(outer, inner, t):
    assert apply(compose(outer, inner), t) == apply(outer, apply(inner, t))


class TestMgu:
    def test_binds_variable(self):
        assert mgu(a("p(X)"), a("p(t)")) == {"X": C("t")}

    def test_functor_clash(self):
        assert mgu(a("p(X)"), a("q(t)")) is None

    def test_repeated_variable_clash(self):
        assert mgu(a("p(X,X)"), a("p(a,b)")) is None

    def test_occurs_check(self):
        assert mgu(a("p(X)"), a("p(f(X))")) is None

    def test_annotations_ignored(self):
        assert mgu(a("p(X)[ag1]"), a("p(a)[ag2]")) == {"X": C("a")}

    def test_left_variable_bound_to_right(self):
        assert mgu(a("p(X)"), a("p(Y)")) == {"X": V("Y")}


atom_args = st.lists(terms, min_size=2, max_size=2)


@settings(max_examples=300, deadline=None)
@given(atom_args, atom_args)
def test_mgu_unifies_both_ways(xs, ys):
    left, right = Atom("p", tuple(xs)), Atom("p", tuple(ys))
    for x, y in ((left, right), (right, left)):
        theta = mgu(x, y)
        if theta is not None:
            assert apply(theta, x) == apply(theta, y)
    assert (mgu(left, right) is None) == (mgu(right, left) is None)


@settings(max_examples=300, deadline=None)
@given(atom_args, atom_args, substs)
def test_mgu_is_most_general(xs, ys, other):
    """Any unifier found by grounding factors through the mgu."""
    left, right = Atom("p", tuple(xs)), Atom("p", tuple(ys))
    if apply(other, left) != apply(other, right):
        return
    theta = mgu(left, right)
    assert theta is not None
    assert apply(other, apply(theta, left)) == apply(other, left)


class TestEntails:
    def test_subset_succeeds(self):
        assert entails(bs("p(t)[ag1,ag2]"), a("p(X)[ag1]")) == [{"X": C("t")}]

    def test_superset_fails(self):
        assert entails(bs("p(t)[ag1]"), a("p(X)[ag1,ag2]")) == []

    def test_drowning_perceived(self):
        base = bs("drowning(man)[percept,passerby]")
        assert entails(base, a("drowning(Person)[percept]")) == [{"Person": C("man")}]

    def test_cheating_needs_both_sources(self):
        base = bs("cheating(giacomo)[ag1]")
        assert entails(base, a("cheating(giacomo)[ag1]")) == [{}]
        assert entails(base, a("cheating(giacomo)[ag1,ag2]")) == []

    def test_empty_annotations_always_subset(self):
        assert entails(bs("p(a)[percept]"), a("p(a)")) == [{}]

    def test_variable_source(self):
        assert as_set(entails(bs("p(a)[self,ag2]"), a("p(a)[A]"))) == as_set([{"A": C("self")}, {"A": C("ag2")}])


class TestContext:
    def test_firefighter_first_cycle(self):
        assert entails_context(bs("commander(r2)"), parse_context("commander(R)")) == [{"R": C("r2")}]

    def test_true(self):
        assert entails_context(bs(), ()) == [{}]

    def test_negation_after_binding(self):
        ctx = parse_context("p(X) & not q(X)")
        assert entails_context(bs("p(a)[self]"), ctx) == [{"X": C("a")}]
        assert entails_context(bs("p(a)[self]", "q(a)[self]"), ctx) == []

    def test_negation_with_free_variable(self):
        ctx = parse_context("not q(Y)")
        assert entails_context(bs("p(a)"), ctx) == [{}]
        assert entails_context(bs("q(b)"), ctx) == []


class TestTest:
    def test_phone_number(self):
        base = bs("phone_number(v,5551234)[self]")
        assert test(base, a("phone_number(v,N)")) == [{"N": C(5551234)}]

    def test_empty_base(self):
        assert test(bs(), a("p(X)")) == []

    def test_all_answers_in_order(self):
        assert test(bs("p(b)[self]", "p(a)[self]"), a("p(X)")) == [{"X": C("a")}, {"X": C("b")}]


class TestTriggerEntailment:
    def test_annotation_subset(self):
        assert te_entails(parse_trigger("+!p(t)[s,t]"), parse_trigger("+!p(X)[s]")) == {"X": C("t")}

    def test_unannotated_pattern(self):
        assert te_entails(parse_trigger("+!p(t)[ag1]"), parse_trigger("+!p(X)")) == {"X": C("t")}

    def test_operator_mismatch(self):
        assert te_entails(parse_trigger("+p(t)"), parse_trigger("-p(X)")) is None


def test_entails_matches_brute_force():
    rng = random.Random(7)
    for _ in range(300):
        base = BeliefBase(random_belief_base(rng))
        query = random_query(rng)
        assert as_set(entails(base, query)) == brute_entails(list(base), query), (base, query)


def test_context_matches_brute_force():
    from oracles import random_literal

    rng = random.Random(11)
    for _ in range(300):
        base = BeliefBase(random_belief_base(rng))
        ctx = tuple(random_literal(rng) for _ in range(rng.randint(1, 3)))
        assert as_set(entails_context(base, ctx)) == brute_context(list(base), ctx), (base, ctx)


def test_entailment_soundness():
    rng = random.Random(3)
    for _ in range(300):
        base = BeliefBase(random_belief_base(rng))
        query = random_query(rng)
        for theta in entails(base, query):
            ground = apply(theta, query)
            assert any(b.predicate() == ground.predicate() and ground.annotations <= b.annotations
                       for b in base)


def test_annotation_monotonicity():
    rng = random.Random(5)
    for _ in range(300):
        base = BeliefBase(random_belief_base(rng))
        query = random_query(rng)
        if not entails(base, query):
            continue
        for keep in range(len(query.annotations) + 1):
            fewer = query.with_annotations(sorted(query.annotations, key=str)[:keep])
            assert entails(base, fewer)
