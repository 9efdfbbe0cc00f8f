"""Agent configurations and the transition rules of the reasoning cycle.

A configuration is immutable; every rule returns a new one.  ``step``
applies exactly one rule and reports its name, which is what traces record.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Callable, Sequence

from .beliefs import BeliefBase
from .logic import Substitution, apply, mgu, test
from .planlib import Option, applicable_plans, relevant_plans
from .syntax import (
    SELF,
    Action,
    AchieveGoal,
    AddBeliefUpdate,
    AgentProgram,
    ASK_PERFORMATIVES,
    Atom,
    AtomVar,
    Constant,
    DelBeliefUpdate,
    Plan,
    SendAction,
    TestGoal,
    TriggeringEvent,
    TriggerOp,
    is_ground,
    render_atom,
    render_formula,
    render_plan,
    render_term,
    render_trigger,
    var_names,
)

if TYPE_CHECKING:
    from .comms import Message, SocAccPolicy


class Stuck(Exception):
    """No transition rule applies to a configuration."""


class Step(enum.Enum):
    PROC_MSG = "ProcMsg"
    SEL_EV = "SelEv"
    REL_PL = "RelPl"
    APPL_PL = "ApplPl"
    SEL_APPL = "SelAppl"
    ADD_IM = "AddIM"
    SEL_INT = "SelInt"
    EXEC_INT = "ExecInt"
    CLR_INT = "ClrInt"


@dataclass(frozen=True)
class Intention:
    """A stack of partially instantiated plans, bottom first."""

    iid: int
    stack: tuple[Plan, ...]

    @property
    def top(self) -> Plan:
        return self.stack[-1]

    def push(self, plan: Plan) -> Intention:
        return Intention(self.iid, self.stack + (plan,))

    def with_top(self, plan: Plan) -> Intention:
        return Intention(self.iid, self.stack[:-1] + (plan,))


@dataclass(frozen=True)
class Event:
    trigger: TriggeringEvent
    intention: Intention | None = None  # None is the empty intention of external events

    @property
    def external(self) -> bool:
        return self.intention is None


def first(items: Sequence) -> int:
    return 0


def last(items: Sequence) -> int:
    return len(items) - 1


EVENT_POLICIES: dict[str, Callable[[Sequence], int]] = {"fifo": first, "lifo": last}
OPTION_POLICIES: dict[str, Callable[[Sequence], int]] = {"first": first, "last": last}
# intentions that just ran are re-appended, so picking the head is round-robin
INTENTION_POLICIES: dict[str, Callable[[Sequence], int]] = {"roundrobin": first, "lifo": last}
MESSAGE_POLICIES: dict[str, Callable[[Sequence], int]] = {"fifo": first, "lifo": last}


@dataclass(frozen=True)
class Policies:
    select_event: Callable[[Sequence], int] = first
    select_option: Callable[[Sequence], int] = first
    select_intention: Callable[[Sequence], int] = first
    select_message: Callable[[Sequence], int] = first

    @classmethod
    def named(cls, events: str = "fifo", options: str = "first",
              intentions: str = "roundrobin", messages: str = "fifo") -> Policies:
        try:
            return cls(EVENT_POLICIES[events], OPTION_POLICIES[options],
                       INTENTION_POLICIES[intentions], MESSAGE_POLICIES[messages])
        except KeyError as exc:
            raise ValueError(f"unknown selection policy {exc.args[0]!r}") from None


def _allow_all():
    from .comms import SocAccPolicy

    return SocAccPolicy()


@dataclass(frozen=True)
class AgentConfiguration:
    name: str
    beliefs: BeliefBase
    plans: tuple[Plan, ...]
    # circumstance
    events: tuple[Event, ...] = ()
    intentions: tuple[Intention, ...] = ()
    actions: tuple[Atom, ...] = ()
    # mailboxes
    inbox: tuple[Message, ...] = ()
    outbox: tuple[Message, ...] = ()
    suspended: tuple[tuple[str, Intention], ...] = ()
    # temporary information of the current cycle; None is "unset"
    t_relevant: tuple[Option, ...] | None = None
    t_applicable: tuple[Option, ...] | None = None
    t_intention: Intention | None = None
    t_event: Event | None = None
    t_option: Option | None = None
    step: Step = Step.PROC_MSG
    policies: Policies = field(default_factory=Policies)
    socacc: SocAccPolicy = field(default_factory=_allow_all)
    mid_counter: int = 0
    iid_counter: int = 0
    notes: tuple[str, ...] = ()

    @classmethod
    def from_program(cls, prog: AgentProgram, policies: Policies | None = None,
                     socacc: SocAccPolicy | None = None) -> AgentConfiguration:
        cfg = cls(prog.name, BeliefBase(prog.beliefs), prog.plans)
        if policies is not None:
            cfg = replace(cfg, policies=policies)
        if socacc is not None:
            cfg = replace(cfg, socacc=socacc)
        return cfg

    # helpers used by the rules

    def fresh_mid(self) -> tuple[str, AgentConfiguration]:
        n = self.mid_counter + 1
        return f"{self.name}-{n}", replace(self, mid_counter=n)

    def new_intention(self, plan: Plan) -> tuple[Intention, AgentConfiguration]:
        n = self.iid_counter + 1
        return Intention(n, (plan,)), replace(self, iid_counter=n)

    def with_goal(self, goal: Atom) -> AgentConfiguration:
        """Add an internal event ``+!goal`` whose intention is waiting on that goal."""
        root = Plan(TriggeringEvent(TriggerOp.ADD_ACHIEVE, Atom("initial_goal")), (), (AchieveGoal(goal),))
        i, cfg = self.new_intention(root)
        return replace(cfg, events=cfg.events + (Event(TriggeringEvent(TriggerOp.ADD_ACHIEVE, goal), i),))

    def with_event(self, trigger: TriggeringEvent) -> AgentConfiguration:
        return replace(self, events=self.events + (Event(trigger),))

    def quiet(self) -> bool:
        return not (self.events or self.intentions or self.inbox or self.outbox
                    or self.suspended or self.actions)


def _without(intentions: tuple[Intention, ...], i: Intention) -> tuple[Intention, ...]:
    return tuple(j for j in intentions if j.iid != i.iid)


def _replace_in_place(intentions: tuple[Intention, ...], new: Intention) -> tuple[Intention, ...]:
    return tuple(new if j.iid == new.iid else j for j in intentions)


# ── event and plan selection ──────────────────────────────────────────


def rule_sel_ev(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    if not cfg.events:
        return replace(cfg, step=Step.SEL_INT), "SelEv2"
    k = cfg.policies.select_event(cfg.events)
    chosen = cfg.events[k]
    events = cfg.events[:k] + cfg.events[k + 1:]
    return replace(cfg, events=events, t_event=chosen, step=Step.REL_PL), "SelEv1"


def _intention_vars(i: Intention | None) -> set[str]:
    return set() if i is None else var_names(i.stack)


def rule_rel(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    ev = cfg.t_event
    rel = relevant_plans(cfg.plans, ev.trigger, _intention_vars(ev.intention))
    if not rel:
        return replace(cfg, step=Step.SEL_EV), "Rel2"
    return replace(cfg, t_relevant=tuple(rel), step=Step.APPL_PL), "Rel1"


def rule_appl(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    ap = applicable_plans(cfg.beliefs, cfg.t_relevant)
    if not ap:
        return replace(cfg, step=Step.SEL_INT), "Appl2"
    return replace(cfg, t_applicable=tuple(ap), step=Step.SEL_APPL), "Appl1"


def rule_sel_appl(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    k = cfg.policies.select_option(cfg.t_applicable)
    return replace(cfg, t_option=cfg.t_applicable[k], step=Step.ADD_IM), "SelAppl"


def rule_add_im(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    plan, theta = cfg.t_option
    means = apply(theta, plan)
    ev = cfg.t_event
    if ev.external:
        i, cfg = cfg.new_intention(means)
        return replace(cfg, intentions=cfg.intentions + (i,), step=Step.SEL_INT), "ExtEv"
    resumed = ev.intention.push(means)
    return replace(cfg, intentions=cfg.intentions + (resumed,), step=Step.SEL_INT), "IntEv"


def rule_sel_int(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    if not cfg.intentions:
        return replace(cfg, step=Step.PROC_MSG), "SelInt2"
    k = cfg.policies.select_intention(cfg.intentions)
    return replace(cfg, t_intention=cfg.intentions[k], step=Step.EXEC_INT), "SelInt1"


# ── executing an intention ────────────────────────────────────────────


def _advance(i: Intention) -> Intention:
    top = i.top
    return i.with_top(Plan(top.trigger, top.context, top.body[1:]))


def _drop(cfg: AgentConfiguration, i: Intention, why: str) -> tuple[AgentConfiguration, str]:
    return (replace(cfg, intentions=_without(cfg.intentions, i), step=Step.CLR_INT,
                    notes=cfg.notes + (why,)), "DropInt")


def _updated(cfg: AgentConfiguration, old: Intention, new: Intention) -> tuple[Intention, ...]:
    return _without(cfg.intentions, old) + (new,)


def rule_exec(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    i = cfg.t_intention
    top = i.top
    if not top.body:
        # nothing to execute (a plan with an empty body was just adopted)
        return replace(cfg, step=Step.CLR_INT), "ExecEmpty"
    f = top.body[0]

    if isinstance(f, SendAction):
        return _exec_send(cfg, i, f)

    if isinstance(f, Action):
        if not is_ground(f.atom):
            return _drop(cfg, i, f"action {render_atom(f.atom)} is not ground; intention dropped")
        return (replace(cfg, actions=cfg.actions + (f.atom,), intentions=_updated(cfg, i, _advance(i)),
                        step=Step.CLR_INT), "Action")

    if isinstance(f, AchieveGoal):
        if isinstance(f.atom, AtomVar):
            return _drop(cfg, i, f"goal !{render_atom(f.atom)} is unbound; intention dropped")
        ev = Event(TriggeringEvent(TriggerOp.ADD_ACHIEVE, f.atom), i)
        return (replace(cfg, events=cfg.events + (ev,), intentions=_without(cfg.intentions, i),
                        step=Step.PROC_MSG), "AchvGl")

    if isinstance(f, TestGoal):
        if isinstance(f.atom, AtomVar):
            return _drop(cfg, i, f"test goal ?{render_atom(f.atom)} is unbound; intention dropped")
        answers = test(cfg.beliefs, f.atom)
        if answers:
            theta = answers[0]
            new = i.with_top(apply(theta, Plan(top.trigger, top.context, top.body[1:])))
            return replace(cfg, intentions=_updated(cfg, i, new), step=Step.CLR_INT), "TestGl1"
        ev = Event(TriggeringEvent(TriggerOp.ADD_TEST, f.atom), i)
        return (replace(cfg, events=cfg.events + (ev,), intentions=_without(cfg.intentions, i),
                        step=Step.CLR_INT), "TestGl2")

    if isinstance(f, AddBeliefUpdate):
        b = f.atom
        if isinstance(b, AtomVar) or not is_ground(b):
            return _drop(cfg, i, f"belief addition +{render_atom(b)} is not ground; intention dropped")
        if not b.annotations:
            b = b.with_annotations({SELF})
        ev = Event(TriggeringEvent(TriggerOp.ADD_BELIEF, b))
        return (replace(cfg, beliefs=cfg.beliefs.add(b), events=cfg.events + (ev,),
                        intentions=_updated(cfg, i, _advance(i)), step=Step.CLR_INT), "AddBel")

    if isinstance(f, DelBeliefUpdate):
        at = f.atom
        if isinstance(at, AtomVar):
            return _drop(cfg, i, f"belief deletion -{render_atom(at)} is unbound; intention dropped")
        if not at.annotations:
            at = at.with_annotations({SELF})
        if is_ground(at):
            targets = [at]
        else:
            targets = [apply(theta, at) for theta in test(cfg.beliefs, at)]
        bs, events = cfg.beliefs, cfg.events
        for b in targets:
            bs = bs.delete(b)
            events = events + (Event(TriggeringEvent(TriggerOp.DEL_BELIEF, b)),)
        return (replace(cfg, beliefs=bs, events=events, intentions=_updated(cfg, i, _advance(i)),
                        step=Step.CLR_INT), "DelBel")

    raise Stuck(f"no rule executes {render_formula(f)}")


def _exec_send(cfg: AgentConfiguration, i: Intention, f: SendAction) -> tuple[AgentConfiguration, str]:
    from .comms import Message, normalize_content

    receiver = f.receiver
    if not (isinstance(receiver, Constant) and isinstance(receiver.value, str)):
        return _drop(cfg, i, f"receiver {render_term(receiver)} is not an agent name; intention dropped")
    mid, cfg = cfg.fresh_mid()
    msg = Message(mid, receiver.value, f.ilf, normalize_content(f.ilf, f.content))
    rest = _advance(i)
    if f.ilf in ASK_PERFORMATIVES:
        return (replace(cfg, outbox=cfg.outbox + (msg,), suspended=cfg.suspended + ((mid, rest),),
                        intentions=_without(cfg.intentions, i), step=Step.PROC_MSG), "ExecActSndAsk")
    return (replace(cfg, outbox=cfg.outbox + (msg,), intentions=_updated(cfg, i, rest),
                    step=Step.CLR_INT), "ExecActSnd")


# ── clearing intentions ───────────────────────────────────────────────


def _goal_trigger_op(f) -> TriggerOp | None:
    if isinstance(f, AchieveGoal):
        return TriggerOp.ADD_ACHIEVE
    if isinstance(f, TestGoal):
        return TriggerOp.ADD_TEST
    return None


def rule_clr(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    current = cfg.t_intention.iid if cfg.t_intention is not None else None
    ordered = sorted(cfg.intentions, key=lambda j: j.iid != current)
    for j in ordered:
        if j.top.body:
            continue
        if len(j.stack) == 1:
            return replace(cfg, intentions=_without(cfg.intentions, j), step=Step.PROC_MSG), "ClrInt1"
        finished, below = j.top, j.stack[-2]
        rest = Plan(below.trigger, below.context, below.body[1:])
        notes = cfg.notes
        g = below.body[0] if below.body else None
        theta: Substitution | None = None
        if g is not None and _goal_trigger_op(g) == finished.trigger.op:
            theta = mgu(g.atom, finished.trigger.atom)
        if theta is None:
            notes += (f"finished plan {render_trigger(finished.trigger)} matches no goal below it",)
            theta = {}
        new = Intention(j.iid, j.stack[:-2] + (apply(theta, rest),))
        return (replace(cfg, intentions=_replace_in_place(cfg.intentions, new), step=Step.CLR_INT,
                        notes=notes), "ClrInt2")
    return replace(cfg, step=Step.PROC_MSG), "ClrInt3"


# ── dispatcher ────────────────────────────────────────────────────────

_RULES = {
    Step.SEL_EV: rule_sel_ev,
    Step.REL_PL: rule_rel,
    Step.APPL_PL: rule_appl,
    Step.SEL_APPL: rule_sel_appl,
    Step.ADD_IM: rule_add_im,
    Step.SEL_INT: rule_sel_int,
    Step.EXEC_INT: rule_exec,
    Step.CLR_INT: rule_clr,
}


def reset_temporary(cfg: AgentConfiguration) -> AgentConfiguration:
    return replace(cfg, t_relevant=None, t_applicable=None, t_intention=None, t_event=None, t_option=None)


def step(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    """Apply the single rule enabled by ``cfg``'s step label."""
    cfg = replace(cfg, notes=())
    if cfg.step is Step.PROC_MSG:
        from .comms import proc_msg

        return proc_msg(cfg)
    rule = _RULES.get(cfg.step)
    if rule is None:
        raise Stuck(f"unknown step {cfg.step}")
    return rule(cfg)


# ── rendering for traces ──────────────────────────────────────────────

COMPONENTS = ("bs", "ps", "E", "I", "A", "In", "Out", "SI", "R", "Ap", "iota", "eps", "rho", "s")

_FIELDS = {
    "bs": "beliefs", "ps": "plans", "E": "events", "I": "intentions", "A": "actions",
    "In": "inbox", "Out": "outbox", "SI": "suspended", "R": "t_relevant", "Ap": "t_applicable",
    "iota": "t_intention", "eps": "t_event", "rho": "t_option", "s": "step",
}


def component(cfg: AgentConfiguration, name: str):
    return getattr(cfg, _FIELDS[name])


def render_subst(theta: Substitution) -> str:
    return "{" + ", ".join(f"{k}->{render_term(v)}" for k, v in sorted(theta.items())) + "}"


def render_intention(i: Intention | None) -> str:
    if i is None:
        return "T"
    return "[" + " | ".join(render_plan(p, terminator="") for p in i.stack) + "]"


def render_event(e: Event | None) -> str:
    if e is None:
        return "_"
    return f"<{render_trigger(e.trigger)},{render_intention(e.intention)}>"


def render_option(o: Option | None) -> str:
    if o is None:
        return "_"
    plan, theta = o
    return f"({render_plan(plan, terminator='')}, {render_subst(theta)})"


def render_component(cfg: AgentConfiguration, name: str) -> str:
    from .comms import render_message

    value = component(cfg, name)
    if name == "s":
        return value.value
    if name == "bs":
        return "{" + ", ".join(value.snapshot()) + "}"
    if name == "ps":
        return "{" + " ".join(render_plan(p) for p in value) + "}"
    if name == "E":
        return "{" + ", ".join(render_event(e) for e in value) + "}"
    if name == "I":
        return "{" + ", ".join(render_intention(i) for i in value) + "}"
    if name == "A":
        return "{" + ", ".join(render_atom(a) for a in value) + "}"
    if name in ("In", "Out"):
        return "{" + ", ".join(render_message(m) for m in value) + "}"
    if name == "SI":
        return "{" + ", ".join(f"({mid}, {render_intention(i)})" for mid, i in value) + "}"
    if name in ("R", "Ap"):
        return "_" if value is None else "{" + ", ".join(render_option(o) for o in value) + "}"
    if name == "iota":
        return "_" if value is None else render_intention(value)
    if name == "eps":
        return render_event(value)
    if name == "rho":
        return render_option(value)
    raise KeyError(name)


def changed_components(before: AgentConfiguration, after: AgentConfiguration) -> list[str]:
    return [c for c in COMPONENTS if component(before, c) != component(after, c)]


def diff(before: AgentConfiguration, after: AgentConfiguration) -> dict[str, str]:
    return {c: render_component(after, c) for c in changed_components(before, after)}


# ── invariant monitoring ──────────────────────────────────────────────

REPLY_RULES = frozenset({"TellRepl", "UntellRepl", "TellHowRepl"})


class InvariantViolation(AssertionError):
    pass


class SuspensionMonitor:
    """Checks the suspension and resumption invariants on every observed transition."""

    def __init__(self):
        self.checked = 0
        self.violations: list[str] = []

    def _fail(self, agent: str, rule: str, msg: str) -> None:
        self.violations.append(f"{agent} {rule}: {msg}")
        raise InvariantViolation(self.violations[-1])

    def observe(self, before: AgentConfiguration, rule: str, after: AgentConfiguration) -> None:
        self.checked += 1
        name = after.name
        mids = [mid for mid, _ in after.suspended]
        if len(mids) != len(set(mids)):
            self._fail(name, rule, "duplicate message ids in SI")
        active = [i.iid for i in after.intentions]
        if len(active) != len(set(active)):
            self._fail(name, rule, "intention appears twice in I")
        waiting = {i.iid for _, i in after.suspended}
        if waiting & set(active):
            self._fail(name, rule, "intention both in I and SI")

        before_ids = {i.iid for i in before.intentions}
        entered = [i for i in after.intentions if i.iid not in before_ids]
        si_before = dict(before.suspended)

        if rule == "ExecActSndAsk":
            iota = before.t_intention
            if len(after.suspended) != len(before.suspended) + 1:
                self._fail(name, rule, "SI did not grow by exactly one")
            if iota.iid in active:
                self._fail(name, rule, "asking intention still in I")
            if after.suspended[-1][1].iid != iota.iid:
                self._fail(name, rule, "SI entry is not the asking intention")
        if rule in REPLY_RULES:
            if len(after.suspended) != len(before.suspended) - 1:
                self._fail(name, rule, "SI did not shrink by exactly one")
        if rule == "AchvGl":
            ev = after.events[-1]
            f = ev.intention.top.body[0] if ev.intention and ev.intention.top.body else None
            if not isinstance(f, AchieveGoal):
                self._fail(name, rule, "achievement goal not kept at the front of the suspended plan")

        for i in entered:
            if rule == "ExtEv":
                if i.iid <= before.iid_counter or len(i.stack) != 1:
                    self._fail(name, rule, "ExtEv did not create a fresh single-plan intention")
            elif rule == "IntEv":
                waiting_on = before.t_event.intention
                if waiting_on is None or waiting_on.iid != i.iid:
                    self._fail(name, rule, "IntEv resumed an intention other than the event's")
                if i.stack[:-1] != waiting_on.stack:
                    self._fail(name, rule, "IntEv did not push the intended means on top")
            elif rule in REPLY_RULES:
                resumed = [m for m, j in before.suspended if j.iid == i.iid]
                if not resumed or any(m in dict(after.suspended) for m in resumed):
                    self._fail(name, rule, "resumed intention was not taken from SI")
                if si_before[resumed[0]] != i:
                    self._fail(name, rule, "resumed intention differs from the suspended one")
            else:
                self._fail(name, rule, f"intention {i.iid} entered I outside ExtEv/IntEv/replies")
