"""Messages, social acceptance and the rules for interpreting received messages."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .agent import AgentConfiguration, Event, Step
from .logic import apply, entails, test
from .planlib import add_plans, relevant_with_index, remove_plans
from .syntax import (
    ASK_PERFORMATIVES,
    Atom,
    AtomVar,
    Constant,
    Performative,
    Plan,
    TriggeringEvent,
    TriggerOp,
    is_ground,
    parse_content,
    render_atom,
    render_content,
)

__all__ = [
    "ASK_PERFORMATIVES",
    "Message",
    "Performative",
    "SocAccPolicy",
    "SocAccRule",
    "malformed",
    "normalize_content",
    "parse_wire",
    "proc_msg",
    "render_message",
    "soc_acc",
    "wire",
]

ATOM_SET_PERFORMATIVES = frozenset({Performative.TELL, Performative.UNTELL,
                                    Performative.ASK_IF, Performative.ASK_ALL})
PLAN_SET_PERFORMATIVES = frozenset({Performative.TELL_HOW, Performative.UNTELL_HOW})
GOAL_PERFORMATIVES = frozenset({Performative.ACHIEVE, Performative.UNACHIEVE})


@dataclass(frozen=True)
class Message:
    """``id`` is the addressee while the message sits in Out, and the sender once in In."""

    mid: str
    id: str
    ilf: Performative
    content: object


def _sorted_atoms(atoms) -> tuple:
    unique = {render_atom(a): a for a in atoms}
    return tuple(unique[k] for k in sorted(unique))


def normalize_content(ilf: Performative, raw) -> object:
    """Bring send-action content into the shape each performative expects.

    Content that cannot be normalized is returned unchanged; the receiver
    then discards it as malformed.
    """
    if ilf in GOAL_PERFORMATIVES:
        if isinstance(raw, tuple) and len(raw) == 1:
            return raw[0]
        return raw
    if ilf is Performative.ASK_HOW:
        return raw
    if isinstance(raw, (Atom, AtomVar)):
        raw = (raw,)
    if ilf in ATOM_SET_PERFORMATIVES and isinstance(raw, tuple) and all(isinstance(a, Atom) for a in raw):
        return _sorted_atoms(raw)
    return raw


def malformed(msg: Message) -> str | None:
    """Why ``msg``'s content does not fit its performative, or None if it does."""
    c, ilf = msg.content, msg.ilf
    if ilf in ATOM_SET_PERFORMATIVES:
        if not isinstance(c, tuple) or not all(isinstance(a, Atom) for a in c):
            return f"{ilf.value} needs a set of atoms"
        if ilf is Performative.TELL and not is_ground(c):
            return "tell content must be ground"
        if ilf in (Performative.ASK_IF, Performative.ASK_ALL) and len(c) != 1:
            return f"{ilf.value} needs exactly one atom"
        if ilf is Performative.ASK_IF and not is_ground(c):
            return "askIf content must be ground"
        return None
    if ilf in GOAL_PERFORMATIVES:
        return None if isinstance(c, Atom) else f"{ilf.value} needs a single atom"
    if ilf in PLAN_SET_PERFORMATIVES:
        if isinstance(c, tuple) and all(isinstance(p, Plan) for p in c):
            return None
        return f"{ilf.value} needs a set of plans"
    if isinstance(c, TriggeringEvent) and isinstance(c.atom, Atom):
        return None
    return "askHow needs a triggering event"


# ── social acceptance ─────────────────────────────────────────────────


@dataclass(frozen=True)
class SocAccRule:
    """Patterns are plain strings; ``"*"`` matches anything."""

    performative: str = "*"
    sender: str = "*"
    functor: str = "*"
    allow: bool = True

    def matches(self, sender: str, ilf: Performative, content) -> bool:
        if self.performative not in ("*", ilf.value):
            return False
        if self.sender not in ("*", sender):
            return False
        if self.functor == "*":
            return True
        functors = content_functors(content)
        return bool(functors) and all(f == self.functor for f in functors)


@dataclass(frozen=True)
class SocAccPolicy:
    rules: tuple[SocAccRule, ...] = ()
    default: bool = True

    @classmethod
    def from_config(cls, data: dict | None) -> SocAccPolicy:
        """Build a policy from ``{default: allow|deny, rules: [{performative, sender, functor, verdict}]}``."""
        if not data:
            return cls()
        rules = []
        for r in data.get("rules", ()):
            verdict = r.get("verdict", "allow")
            if verdict not in ("allow", "deny"):
                raise ValueError(f"socacc verdict must be allow or deny, got {verdict!r}")
            rules.append(SocAccRule(str(r.get("performative", "*")), str(r.get("sender", "*")),
                                    str(r.get("functor", "*")), verdict == "allow"))
        default = data.get("default", "allow")
        if default not in ("allow", "deny"):
            raise ValueError(f"socacc default must be allow or deny, got {default!r}")
        return cls(tuple(rules), default == "allow")


def content_functors(content) -> list[str]:
    if isinstance(content, Atom):
        return [content.functor]
    if isinstance(content, TriggeringEvent):
        return content_functors(content.atom)
    if isinstance(content, Plan):
        return content_functors(content.trigger)
    if isinstance(content, tuple):
        return [f for c in content for f in content_functors(c)]
    return []


def soc_acc(policy: SocAccPolicy, sender: str, ilf: Performative, content) -> bool:
    for rule in policy.rules:
        if rule.matches(sender, ilf, content):
            return rule.allow
    return policy.default


# ── receive rules ─────────────────────────────────────────────────────


def _suspended_index(cfg: AgentConfiguration, mid: str) -> int | None:
    for k, (m, _) in enumerate(cfg.suspended):
        if m == mid:
            return k
    return None


def _resume(cfg: AgentConfiguration, k: int) -> AgentConfiguration:
    _, i = cfg.suspended[k]
    return replace(cfg, suspended=cfg.suspended[:k] + cfg.suspended[k + 1:],
                   intentions=cfg.intentions + (i,))


def recv_tell(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    source = Constant(msg.id)
    bs, events = cfg.beliefs, cfg.events
    for b in msg.content:
        b = b.with_annotations({source})
        bs = bs.add(b)
        events += (Event(TriggeringEvent(TriggerOp.ADD_BELIEF, b)),)
    cfg = replace(cfg, beliefs=bs, events=events)
    k = _suspended_index(cfg, msg.mid)
    if k is None:
        return cfg, "Tell"
    return _resume(cfg, k), "TellRepl"


def recv_untell(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    source = Constant(msg.id)
    targets = {}
    for at in msg.content:
        for theta in test(cfg.beliefs, at):
            b = apply(theta, at).with_annotations({source})
            targets.setdefault(render_atom(b), b)
    bs, events = cfg.beliefs, cfg.events
    for key in sorted(targets):
        b = targets[key]
        bs = bs.delete(b)
        events += (Event(TriggeringEvent(TriggerOp.DEL_BELIEF, b)),)
    cfg = replace(cfg, beliefs=bs, events=events)
    k = _suspended_index(cfg, msg.mid)
    if k is None:
        return cfg, "Untell"
    return _resume(cfg, k), "UntellRepl"


def recv_achieve(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    ev = Event(TriggeringEvent(TriggerOp.ADD_ACHIEVE, msg.content))
    return replace(cfg, events=cfg.events + (ev,)), "Achieve"


def recv_unachieve(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    ev = Event(TriggeringEvent(TriggerOp.DEL_ACHIEVE, msg.content))
    return replace(cfg, events=cfg.events + (ev,)), "Unachieve"


def recv_tell_how(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    cfg = replace(cfg, plans=add_plans(cfg.plans, msg.content))
    k = _suspended_index(cfg, msg.mid)
    if k is None:
        return cfg, "TellHow"
    return _resume(cfg, k), "TellHowRepl"


def recv_untell_how(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    return replace(cfg, plans=remove_plans(cfg.plans, msg.content)), "UntellHow"


def _strip(a: Atom) -> Atom:
    return a.with_annotations(())


def _reply(cfg: AgentConfiguration, msg: Message, ilf: Performative, content) -> AgentConfiguration:
    return replace(cfg, outbox=cfg.outbox + (Message(msg.mid, msg.id, ilf, content),))


def recv_ask_if(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    (b,) = msg.content
    ilf = Performative.TELL if entails(cfg.beliefs, b) else Performative.UNTELL
    return _reply(cfg, msg, ilf, (_strip(b),)), "AskIf"


def recv_ask_all(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    (at,) = msg.content
    answers = test(cfg.beliefs, at)
    if answers:
        reply = _reply(cfg, msg, Performative.TELL, _sorted_atoms(_strip(apply(t, at)) for t in answers))
    else:
        reply = _reply(cfg, msg, Performative.UNTELL, (_strip(at),))
    return reply, "AskAll"


def recv_ask_how(msg: Message, cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    plans = tuple(cfg.plans[index] for index, _, _ in relevant_with_index(cfg.plans, msg.content))
    return _reply(cfg, msg, Performative.TELL_HOW, plans), "AskHow"


_RECEIVERS = {
    Performative.TELL: recv_tell,
    Performative.UNTELL: recv_untell,
    Performative.ACHIEVE: recv_achieve,
    Performative.UNACHIEVE: recv_unachieve,
    Performative.TELL_HOW: recv_tell_how,
    Performative.UNTELL_HOW: recv_untell_how,
    Performative.ASK_IF: recv_ask_if,
    Performative.ASK_ALL: recv_ask_all,
    Performative.ASK_HOW: recv_ask_how,
}


def proc_msg(cfg: AgentConfiguration) -> tuple[AgentConfiguration, str]:
    """Select one message from In and interpret it; always moves on to SelEv."""
    if not cfg.inbox:
        return replace(cfg, step=Step.SEL_EV), "NoMsg"
    k = cfg.policies.select_message(cfg.inbox)
    msg = cfg.inbox[k]
    cfg = replace(cfg, inbox=cfg.inbox[:k] + cfg.inbox[k + 1:], step=Step.SEL_EV)
    problem = malformed(msg)
    if problem is not None:
        return replace(cfg, notes=cfg.notes + (f"discarded {wire(msg)}: {problem}",)), "MalformedMsg"
    if not soc_acc(cfg.socacc, msg.id, msg.ilf, msg.content):
        return cfg, "NotSocAcc"
    return _RECEIVERS[msg.ilf](msg, cfg)


# ── rendering ─────────────────────────────────────────────────────────


def _content_text(msg: Message) -> str:
    c = msg.content
    if isinstance(c, tuple) and not c:
        return "{}"
    return render_content(c)


def render_message(msg: Message) -> str:
    return f"<{msg.mid},{msg.id},{msg.ilf.value},{_content_text(msg)}>"


def wire(msg: Message) -> str:
    """``mid|id|performative|content`` with set contents sorted."""
    return f"{msg.mid}|{msg.id}|{msg.ilf.value}|{_content_text(msg)}"


def parse_wire(text: str) -> Message:
    mid, ident, perf, content = text.split("|", 3)
    ilf = Performative(perf)
    raw = () if content == "{}" else parse_content(content)
    return Message(mid, ident, ilf, normalize_content(ilf, raw))
