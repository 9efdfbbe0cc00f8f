from __future__ import annotations

import random
from dataclasses import replace

import pytest

from agentspeak.agent import Event, Intention, Step, changed_components
from agentspeak.comms import (
    Message,
    SocAccPolicy,
    SocAccRule,
    malformed,
    normalize_content,
    parse_wire,
    proc_msg,
    render_message,
    soc_acc,
    wire,
)
from agentspeak.syntax import (
    Performative as P,
    TriggerOp,
    TriggeringEvent,
    parse_atom,
    parse_plan,
    parse_trigger,
)

from conftest import agent_from, program_text
from oracles import random_belief_base, random_ground_atom, random_plan, random_query

a = parse_atom
R2_ONLY = SocAccPolicy((SocAccRule("achieve", "r2"),), default=False)


def deliver(cfg, *messages):
    return replace(cfg, inbox=cfg.inbox + messages, step=Step.PROC_MSG)


def msg(mid, sender, ilf, content):
    return Message(mid, sender, ilf, normalize_content(ilf, content))


class TestSocAcc:
    def test_allow_all(self):
        assert soc_acc(SocAccPolicy(), "anyone", P.UNTELL_HOW, ())

    def test_commander_only(self):
        goal = a("fight_post(r3, south)")
        assert soc_acc(R2_ONLY, "r2", P.ACHIEVE, goal)
        assert not soc_acc(R2_ONLY, "r1", P.ACHIEVE, goal)
        assert not soc_acc(R2_ONLY, "r2", P.TELL, (goal,))

    def test_first_matching_rule_wins(self):
        policy = SocAccPolicy((SocAccRule("tell", "*", "secret", allow=False), SocAccRule("tell")), default=False)
        assert not soc_acc(policy, "x", P.TELL, (a("secret(1)"),))
        assert soc_acc(policy, "x", P.TELL, (a("open(1)"),))
        assert not soc_acc(policy, "x", P.ACHIEVE, a("open(1)"))

    def test_functor_pattern_on_plans_and_triggers(self):
        rule = SocAccRule(functor="reachSharedBel")
        assert rule.matches("x", P.ASK_HOW, parse_trigger("+!reachSharedBel(P, A)"))
        assert rule.matches("x", P.TELL_HOW, (parse_plan("+!reachSharedBel(P, A) <- true."),))
        assert not rule.matches("x", P.TELL_HOW, ())

    def test_from_config(self):
        policy = SocAccPolicy.from_config(
            {"default": "deny", "rules": [{"performative": "achieve", "sender": "r2", "verdict": "allow"}]})
        assert policy == R2_ONLY
        with pytest.raises(ValueError):
            SocAccPolicy.from_config({"default": "maybe"})
        with pytest.raises(ValueError):
            SocAccPolicy.from_config({"rules": [{"verdict": "perhaps"}]})


class TestProcMsg:
    def test_no_message(self):
        cfg, rule = proc_msg(agent_from("+p <- a."))
        assert rule == "NoMsg" and cfg.step is Step.SEL_EV

    def test_tell_from_firefighter(self):
        r2 = agent_from(program_text("firefighter_r2.asl"), "r2")
        cfg, rule = proc_msg(deliver(r2, msg("r1-1", "r1", P.TELL, a("spreading(south)"))))
        assert rule == "Tell"
        assert "spreading(south)[r1]" in cfg.beliefs.snapshot()
        assert cfg.events == (Event(parse_trigger("+spreading(south)[r1]")),)
        assert cfg.inbox == () and cfg.step is Step.SEL_EV

    def test_tell_two_atoms(self):
        cfg, _ = proc_msg(deliver(agent_from("+p <- a."), msg("m", "x", P.TELL, (a("q(2)"), a("q(1)")))))
        assert cfg.beliefs.snapshot() == ["q(1)[x]", "q(2)[x]"]
        assert [e.trigger for e in cfg.events] == [parse_trigger("+q(1)[x]"), parse_trigger("+q(2)[x]")]

    def test_tell_reply_resumes(self):
        i = Intention(4, (parse_plan("+p <- b."),))
        cfg = replace(agent_from("+p <- a."), suspended=(("m7", i),))
        cfg, rule = proc_msg(deliver(cfg, msg("m7", "x", P.TELL, a("q"))))
        assert rule == "TellRepl" and cfg.suspended == () and cfg.intentions == (i,)

    def test_untell_grounds_by_test(self):
        cfg = agent_from("p(a)[r1].\n+p <- a.")
        cfg, rule = proc_msg(deliver(cfg, msg("m", "r1", P.UNTELL, a("p(X)"))))
        assert rule == "Untell" and len(cfg.beliefs) == 0
        assert cfg.events == (Event(parse_trigger("-p(a)[r1]")),)

    def test_untell_other_source_keeps_belief(self):
        cfg = agent_from("p(a).\n+p <- a.")
        cfg, _ = proc_msg(deliver(cfg, msg("m", "r1", P.UNTELL, a("p(a)"))))
        assert cfg.beliefs.snapshot() == ["p(a)[self]"]

    def test_untell_no_match(self):
        cfg0 = agent_from("q(a).\n+p <- a.")
        cfg, _ = proc_msg(deliver(cfg0, msg("m", "r1", P.UNTELL, a("p(X)"))))
        assert cfg.beliefs == cfg0.beliefs and cfg.events == ()

    def test_untell_reply(self):
        i = Intention(1, (parse_plan("+p <- b."),))
        cfg = replace(agent_from("+p <- a."), suspended=(("m", i),))
        cfg, rule = proc_msg(deliver(cfg, msg("m", "x", P.UNTELL, a("q"))))
        assert rule == "UntellRepl" and cfg.intentions == (i,)

    def test_achieve_from_commander(self):
        r3 = replace(agent_from(program_text("firefighter_r3.asl"), "r3"), socacc=R2_ONLY)
        cfg, rule = proc_msg(deliver(r3, msg("r2-1", "r2", P.ACHIEVE, a("fight_post(r3, south)"))))
        assert rule == "Achieve"
        assert cfg.events == (Event(parse_trigger("+!fight_post(r3, south)")),)

    def test_achieve_denied(self):
        r3 = replace(agent_from(program_text("firefighter_r3.asl"), "r3"), socacc=R2_ONLY)
        before = deliver(r3, msg("r1-1", "r1", P.ACHIEVE, a("fight_post(r3, south)")))
        cfg, rule = proc_msg(before)
        assert rule == "NotSocAcc" and changed_components(before, cfg) == ["In", "s"]

    def test_achieve_ignores_suspension(self):
        i = Intention(1, (parse_plan("+p <- b."),))
        cfg = replace(agent_from("+p <- a."), suspended=(("m", i),))
        cfg, rule = proc_msg(deliver(cfg, msg("m", "x", P.ACHIEVE, a("g"))))
        assert rule == "Achieve" and cfg.suspended == (("m", i),)

    def test_unachieve_then_discarded(self):
        cfg, rule = proc_msg(deliver(agent_from("+p <- a."), msg("m", "x", P.UNACHIEVE, a("g"))))
        assert rule == "Unachieve" and cfg.events[0].trigger == parse_trigger("-!g")
        from agentspeak.agent import step
        cfg, _ = step(cfg)
        cfg, rule = step(cfg)
        assert rule == "Rel2" and cfg.events == ()

    def test_tell_how_and_untell_how(self):
        lib = agent_from(program_text("shared_beliefs.asl"))
        rsb1 = lib.plans[0]
        cfg = agent_from("+p <- a.")
        cfg, rule = proc_msg(deliver(cfg, msg("m", "x", P.TELL_HOW, (rsb1,))))
        assert rule == "TellHow" and cfg.plans[-1] == rsb1 and len(cfg.plans) == 2
        cfg, _ = proc_msg(deliver(cfg, msg("m2", "x", P.TELL_HOW, (rsb1,))))
        assert len(cfg.plans) == 2
        cfg, rule = proc_msg(deliver(cfg, msg("m3", "x", P.UNTELL_HOW, (rsb1,))))
        assert rule == "UntellHow" and len(cfg.plans) == 1 and cfg.events == ()

    def test_tell_how_reply(self):
        i = Intention(1, (parse_plan("+p <- b."),))
        cfg = replace(agent_from("+p <- a."), suspended=(("m", i),))
        cfg, rule = proc_msg(deliver(cfg, msg("m", "x", P.TELL_HOW, (parse_plan("+q <- c."),))))
        assert rule == "TellHowRepl" and cfg.intentions == (i,) and len(cfg.plans) == 2

    @pytest.mark.parametrize("beliefs, query, verdict", [
        ("p(a).", "p(a)", P.TELL),
        ("", "p(a)", P.UNTELL),
        ("p(a)[r9].", "p(a)[self]", P.UNTELL),
    ])
    def test_ask_if(self, beliefs, query, verdict):
        cfg = agent_from(beliefs + "\n+p <- a.", "resp")
        cfg, rule = proc_msg(deliver(cfg, msg("q-3", "asker", P.ASK_IF, a(query))))
        assert rule == "AskIf"
        (reply,) = cfg.outbox
        assert reply == Message("q-3", "asker", verdict, (a(query).with_annotations(()),))

    def test_ask_all(self):
        cfg = agent_from("p(a).\np(b)[r1].\nq.\n+p <- a.")
        out, _ = proc_msg(deliver(cfg, msg("m", "x", P.ASK_ALL, a("p(X)"))))
        assert out.outbox == (Message("m", "x", P.TELL, (a("p(a)"), a("p(b)"))),)
        out, _ = proc_msg(deliver(cfg, msg("m", "x", P.ASK_ALL, a("r(X)"))))
        assert out.outbox == (Message("m", "x", P.UNTELL, (a("r(X)"),)),)
        out, _ = proc_msg(deliver(cfg, msg("m", "x", P.ASK_ALL, a("q"))))
        assert out.outbox == (Message("m", "x", P.TELL, (a("q"),)),)

    def test_ask_how(self):
        cfg = agent_from(program_text("shared_beliefs.asl"))
        out, rule = proc_msg(deliver(cfg, msg("m", "x", P.ASK_HOW, parse_trigger("+!reachSharedBel(P, A)"))))
        assert rule == "AskHow" and out.outbox == (Message("m", "x", P.TELL_HOW, cfg.plans),)
        out, _ = proc_msg(deliver(replace(agent_from("+z <- true."), plans=()), msg("m", "x", P.ASK_HOW, parse_trigger("+!g"))))
        assert out.outbox == (Message("m", "x", P.TELL_HOW, ()),)

    def test_ask_how_selects_by_annotation(self):
        cfg = agent_from("+b[r1] <- a.\n+b[r2] <- c.")
        out, _ = proc_msg(deliver(cfg, msg("m", "x", P.ASK_HOW, parse_trigger("+b[r2]"))))
        assert out.outbox[0].content == (cfg.plans[1],)

    def test_denied_ask_gets_no_reply(self):
        cfg = replace(agent_from("p.\n+z <- true."), socacc=SocAccPolicy(default=False))
        out, rule = proc_msg(deliver(cfg, msg("m", "x", P.ASK_IF, a("p"))))
        assert rule == "NotSocAcc" and out.outbox == ()

    def test_malformed_discarded_with_note(self):
        cfg = deliver(agent_from("+p <- a."), Message("m", "x", P.TELL, (a("p(X)"),)))
        out, rule = proc_msg(cfg)
        assert rule == "MalformedMsg" and out.inbox == () and "ground" in out.notes[0]
        assert out.beliefs == cfg.beliefs


@pytest.mark.parametrize("ilf, content", [
    (P.TELL, "p"), (P.ACHIEVE, ()), (P.TELL_HOW, (parse_atom("p"),)),
    (P.ASK_IF, (parse_atom("p"), parse_atom("q"))), (P.ASK_IF, (parse_atom("p(X)"),)),
    (P.ASK_HOW, parse_atom("p")),
])
def test_malformed_contents(ilf, content):
    assert malformed(Message("m", "x", ilf, content)) is not None


@pytest.mark.parametrize("text", [
    "r1-1|r2|tell|{spreading(south)}",
    "r2-1|r3|achieve|fight_post(r3,south)",
    "ag1-2|ag2|askHow|+!reachSharedBel(P,A)",
    "ag1-3|ag2|tellHow|{}",
    "m|x|askAll|{p(X)}",
])
def test_wire_round_trip(text):
    m = parse_wire(text)
    assert wire(m) == text
    assert render_message(m) == "<" + text.replace("|", ",") + ">"


def test_wire_sorts_content():
    assert wire(msg("m", "x", P.TELL, (a("q"), a("p"), a("q")))) == "m|x|tell|{p,q}"


# ── frame conditions ──────────────────────────────────────────────────

ALLOWED = {
    "Tell": {"In", "bs", "E"},
    "Untell": {"In", "bs", "E"},
    "TellRepl": {"In", "SI", "I", "bs", "E"},
    "UntellRepl": {"In", "SI", "I", "bs", "E"},
    "Achieve": {"In", "E"},
    "Unachieve": {"In", "E"},
    "TellHow": {"In", "ps"},
    "TellHowRepl": {"In", "SI", "I", "ps"},
    "UntellHow": {"In", "ps"},
    "AskIf": {"In", "Out"},
    "AskAll": {"In", "Out"},
    "AskHow": {"In", "Out"},
    "NotSocAcc": {"In"},
    "MalformedMsg": {"In"},
}
REQUIRED = {
    "Tell": {"In", "E"},
    "TellRepl": {"In", "SI", "I", "E"},
    "Achieve": {"In", "E"},
    "Unachieve": {"In", "E"},
    "TellHowRepl": {"In", "SI", "I"},
    "AskIf": {"In", "Out"},
    "AskAll": {"In", "Out"},
    "AskHow": {"In", "Out"},
}
SENDERS = ("ag1", "ag2", "r1")


def random_content(rng: random.Random, ilf: P):
    if ilf in (P.TELL, P.UNTELL):
        if ilf is P.TELL and rng.random() < 0.8:
            return tuple(random_ground_atom(rng).with_annotations(()) for _ in range(rng.randint(1, 2)))
        return tuple(random_query(rng) for _ in range(rng.randint(1, 3)))
    if ilf in (P.ACHIEVE, P.UNACHIEVE):
        return random_query(rng).with_annotations(())
    if ilf in (P.TELL_HOW, P.UNTELL_HOW):
        return tuple(random_plan(rng) for _ in range(rng.randint(0, 2)))
    if ilf is P.ASK_IF:
        return (random_ground_atom(rng).with_annotations(()),)
    if ilf is P.ASK_ALL:
        return (random_query(rng),)
    return TriggeringEvent(TriggerOp.ADD_BELIEF, random_query(rng))


def random_setup(rng: random.Random):
    plans = tuple(random_plan(rng) for _ in range(rng.randint(0, 3)))
    cfg = agent_from("+z <- true.", rng.choice(("ag1", "ag2")))
    for b in random_belief_base(rng):
        cfg = replace(cfg, beliefs=cfg.beliefs.add(b))
    suspended = tuple((f"m{k}", Intention(k + 1, (parse_plan("+w <- b."),))) for k in range(rng.randint(0, 2)))
    rules = tuple(SocAccRule(rng.choice(("*", "tell", "achieve", "askIf")), rng.choice(("*",) + SENDERS),
                             "*", rng.random() < 0.5) for _ in range(rng.randint(0, 2)))
    cfg = replace(cfg, plans=plans, suspended=suspended, iid_counter=len(suspended),
                  socacc=SocAccPolicy(rules, rng.random() < 0.85),
                  events=(Event(parse_trigger("+old")),) if rng.random() < 0.3 else ())
    ilf = rng.choice(list(P))
    content = random_content(rng, ilf)
    if rng.random() < 0.05:
        content = a("loose")  # wrong shape for most performatives
    m = Message(rng.choice(("m0", "m1", "m9")), rng.choice(SENDERS), ilf, normalize_content(ilf, content))
    return deliver(cfg, m)


def test_frame_conditions_hold_for_random_messages():
    rng = random.Random(60)
    seen, violations = set(), []
    for n in range(500):
        before = random_setup(rng)
        after, rule = proc_msg(before)
        seen.add(rule)
        changed = set(changed_components(before, after)) - {"s"}
        if not changed <= ALLOWED[rule] or not REQUIRED.get(rule, {"In"}) <= changed:
            violations.append((n, rule, sorted(changed)))
    assert violations == []
    assert seen == set(ALLOWED)
