"""The multi-agent runtime: environment, belief revision, message exchange and scheduling."""

from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

import yaml

from .agent import (
    AgentConfiguration,
    Event,
    Policies,
    Step,
    Stuck,
    SuspensionMonitor,
    diff,
    reset_temporary,
    step,
)
from .comms import Message, SocAccPolicy, wire
from .logic import apply, entails, mgu
from .syntax import (
    PERCEPT,
    Atom,
    ParseError,
    TriggeringEvent,
    TriggerOp,
    is_ground,
    parse_agent,
    parse_atom,
    parse_trigger,
    render_atom,
)

MAX_STEPS_PER_CYCLE = 100_000


@dataclass(frozen=True)
class ActionEffect:
    """Executing an action matching ``pattern`` adds and removes properties."""

    pattern: Atom
    add: tuple[Atom, ...] = ()
    remove: tuple[Atom, ...] = ()


@dataclass(frozen=True)
class Environment:
    """A declarative environment.

    ``percepts`` maps an agent name (or ``"*"``) to the property patterns it
    can perceive.  Subclass and override :meth:`perceive` / :meth:`execute`
    for anything fancier.
    """

    properties: frozenset[Atom] = frozenset()
    percepts: tuple[tuple[str, tuple[Atom, ...]], ...] = ()
    effects: tuple[ActionEffect, ...] = ()

    def _patterns(self, agent: str) -> tuple[Atom, ...]:
        return tuple(p for name, pats in self.percepts if name in (agent, "*") for p in pats)

    def perceive(self, agent: str) -> frozenset[Atom]:
        patterns = self._patterns(agent)
        return frozenset(prop for prop in self.properties
                         if any(mgu(pat, prop) is not None for pat in patterns))

    def execute(self, agent: str, action: Atom) -> Environment:
        for effect in self.effects:
            theta = mgu(effect.pattern, action)
            if theta is None:
                continue
            gone = [_bare(apply(theta, a)) for a in effect.remove]
            new = {_bare(apply(theta, a)) for a in effect.add}
            # removal patterns may keep free variables: drop every match
            kept = {p for p in self.properties if not any(mgu(g, p) is not None for g in gone)}
            props = kept | {a for a in new if is_ground(a)}
            return replace(self, properties=frozenset(props))
        return self


def _bare(a: Atom) -> Atom:
    return a.with_annotations(())


@dataclass(frozen=True)
class SystemState:
    agents: Mapping[str, AgentConfiguration]
    env: Environment = field(default_factory=Environment)
    cycle: int = 0
    seed: int = 0

    def agent(self, name: str) -> AgentConfiguration:
        return self.agents[name]

    def quiet(self) -> bool:
        return all(cfg.quiet() for cfg in self.agents.values())


def _changed(d: dict[str, str]) -> str:
    return "{" + ", ".join(f"{k}: {v}" for k, v in d.items()) + "}"


def belief_revision(cfg: AgentConfiguration, percepts: Iterable[Atom]) -> AgentConfiguration:
    """Turn the difference between percepts and ``[percept]`` beliefs into events."""
    now = {_bare(p) for p in percepts}
    before = {_bare(b) for b in cfg.beliefs if PERCEPT in b.annotations}
    bs, events = cfg.beliefs, cfg.events
    for p in sorted(now - before, key=render_atom):
        b = p.with_annotations({PERCEPT})
        bs = bs.add(b)
        events += (Event(TriggeringEvent(TriggerOp.ADD_BELIEF, b)),)
    for q in sorted(before - now, key=render_atom):
        b = q.with_annotations({PERCEPT})
        bs = bs.delete(b)
        events += (Event(TriggeringEvent(TriggerOp.DEL_BELIEF, b)),)
    if bs is cfg.beliefs and events == cfg.events:
        return cfg
    return replace(cfg, beliefs=bs, events=events)


def msg_exchange(
    state: SystemState, deliver: Callable[[Message], bool] | None = None
) -> tuple[SystemState, list[str]]:
    """Move messages from every Out to the addressee's In, flipping the id field.

    ``deliver`` may hold a message back in its sender's Out for a later cycle.
    """
    agents = dict(state.agents)
    inboxes = {name: list(cfg.inbox) for name, cfg in agents.items()}
    lines: list[str] = []
    for sender in sorted(agents):
        kept = []
        for msg in agents[sender].outbox:
            if deliver is not None and not deliver(msg):
                kept.append(msg)
                continue
            if msg.id not in agents:
                lines.append(f"cycle={state.cycle} system=MsgExchg from={sender} "
                             f"diagnostic=unknown addressee {msg.id}; dropped {wire(msg)}")
                continue
            received = Message(msg.mid, sender, msg.ilf, msg.content)
            inboxes[msg.id].append(received)
            lines.append(f"cycle={state.cycle} system=MsgExchg from={sender} to={msg.id} msg={wire(received)}")
        agents[sender] = replace(agents[sender], outbox=tuple(kept))
    for name in agents:
        agents[name] = replace(agents[name], inbox=tuple(inboxes[name]))
    return replace(state, agents=agents), lines


IDLE_RULES = frozenset({"NoMsg", "SelEv2", "SelInt2"})


def reasoning_cycle(
    cfg: AgentConfiguration, cycle: int, monitor: SuspensionMonitor | None = None
) -> tuple[AgentConfiguration, list[str], list[str]]:
    """Step one agent from ProcMsg until it is back at ProcMsg.

    Returns the new configuration, its trace lines and the applied rule names.
    """
    cfg = reset_temporary(cfg)
    lines: list[str] = []
    rules: list[str] = []
    for _ in range(MAX_STEPS_PER_CYCLE):
        before = cfg
        cfg, rule = step(cfg)
        rules.append(rule)
        if monitor is not None:
            monitor.observe(before, rule, cfg)
        lines.append(f"cycle={cycle} agent={cfg.name} step={before.step.value} rule={rule} "
                     f"changed={_changed(diff(before, cfg))}")
        for note in cfg.notes:
            lines.append(f"cycle={cycle} agent={cfg.name} diagnostic={note}")
        if cfg.step is Step.PROC_MSG:
            return cfg, lines, rules
    raise Stuck(f"agent {cfg.name} did not finish a reasoning cycle")


@dataclass
class CycleOutcome:
    state: SystemState
    lines: list[str]
    active: bool  # something besides idle looping happened


def run_cycle(
    state: SystemState, scheduler: str = "lex", monitor: SuspensionMonitor | None = None
) -> CycleOutcome:
    n = state.cycle + 1
    names = sorted(state.agents)
    deliver = None
    if scheduler == "random":
        rng = random.Random(state.seed * 1_000_003 + n)
        rng.shuffle(names)
        chosen = [name for name in names if rng.random() < 0.75]
        names = chosen or [rng.choice(names)]
        deliver = lambda _msg: rng.random() < 0.75  # noqa: E731
    elif scheduler != "lex":
        raise ValueError(f"unknown scheduler {scheduler!r}")

    agents = dict(state.agents)
    env = state.env
    per_agent: dict[str, list[str]] = {}
    active = False
    for name in names:
        cfg = agents[name]
        lines: list[str] = []
        revised = belief_revision(cfg, env.perceive(name))
        if revised is not cfg:
            active = True
            lines.append(f"cycle={n} agent={name} system=BRF changed={_changed(diff(cfg, revised))}")
        cfg, stepped, rules = reasoning_cycle(revised, n, monitor)
        lines += stepped
        active = active or not IDLE_RULES.issuperset(rules)
        agents[name] = cfg
        per_agent[name] = lines

    for name in sorted(agents):
        cfg = agents[name]
        for action in cfg.actions:
            active = True
            env = env.execute(name, action)
            per_agent.setdefault(name, []).append(f"cycle={n} agent={name} system=Act action={render_atom(action)}")
        if cfg.actions:
            agents[name] = replace(cfg, actions=())

    merged = [line for name in sorted(per_agent) for line in per_agent[name]]
    state = replace(state, agents=agents, env=env, cycle=n)
    state, exchanged = msg_exchange(state, deliver)
    return CycleOutcome(state, merged + exchanged, active or bool(exchanged))


@dataclass
class RunResult:
    state: SystemState
    trace: list[str]
    stop_reason: str  # "max_cycles", "condition_met" or "quiescent"
    cycles: int


def run(
    state: SystemState,
    max_cycles: int,
    stop_condition: Callable[[SystemState], bool] | None = None,
    *,
    scheduler: str = "lex",
    monitor: SuspensionMonitor | None = None,
    stop_on_quiescence: bool = False,
) -> RunResult:
    if max_cycles < 0:
        raise ValueError("max_cycles must be non-negative")
    trace: list[str] = []
    start = state.cycle
    for _ in range(max_cycles):
        if stop_condition is not None and stop_condition(state):
            return RunResult(state, trace, "condition_met", state.cycle - start)
        outcome = run_cycle(state, scheduler, monitor)
        state = outcome.state
        trace += outcome.lines
        if stop_on_quiescence and not outcome.active and state.quiet():
            return RunResult(state, trace, "quiescent", state.cycle - start)
    if stop_condition is not None and stop_condition(state):
        return RunResult(state, trace, "condition_met", state.cycle - start)
    return RunResult(state, trace, "max_cycles", state.cycle - start)


def beliefs_hold(required: Mapping[str, Iterable[Atom]]) -> Callable[[SystemState], bool]:
    """A stop condition: each named agent entails every listed atom."""
    required = {name: tuple(atoms) for name, atoms in required.items()}

    def check(state: SystemState) -> bool:
        return all(bool(entails(state.agents[name].beliefs, a))
                   for name, atoms in required.items() for a in atoms)

    return check


# ── scenario files ────────────────────────────────────────────────────


class ConfigError(Exception):
    pass


@dataclass
class Scenario:
    state: SystemState
    max_cycles: int | None = None
    stop_when: dict[str, tuple[Atom, ...]] = field(default_factory=dict)
    path: Path | None = None

    def stop_condition(self) -> Callable[[SystemState], bool] | None:
        return beliefs_hold(self.stop_when) if self.stop_when else None


def _atoms(items, what: str) -> tuple[Atom, ...]:
    try:
        return tuple(parse_atom(str(s)) for s in items or ())
    except ParseError as exc:
        raise ConfigError(f"bad atom in {what}: {exc}") from None


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return scenario_from_dict(data, base=path.parent, path=path)


def scenario_from_dict(data: dict, base: Path = Path("."), path: Path | None = None) -> Scenario:
    if not isinstance(data, dict) or not data.get("agents"):
        raise ConfigError("scenario needs a non-empty 'agents' list")
    agents: dict[str, AgentConfiguration] = {}
    for entry in data["agents"]:
        name = entry.get("name")
        if not name or name in agents:
            raise ConfigError(f"agent names must be present and unique (got {name!r})")
        agents[name] = _load_agent(entry, base)

    env_data = data.get("environment") or {}
    percepts = tuple((str(agent), _atoms(pats, f"percepts of {agent}"))
                     for agent, pats in sorted((env_data.get("percepts") or {}).items()))
    effects = tuple(
        ActionEffect(_atoms([e["action"]], "action effect")[0],
                     _atoms(e.get("add"), "action effect"), _atoms(e.get("remove"), "action effect"))
        for e in env_data.get("actions") or ()
    )
    props = _atoms(env_data.get("properties"), "environment properties")
    if not all(is_ground(p) for p in props):
        raise ConfigError("environment properties must be ground")
    env = Environment(frozenset(_bare(p) for p in props), percepts, effects)

    run_data = data.get("run") or {}
    stop = {str(agent): _atoms(atoms, f"stop condition of {agent}")
            for agent, atoms in (run_data.get("stop_when") or {}).items()}
    for agent in stop:
        if agent not in agents:
            raise ConfigError(f"stop condition names unknown agent {agent}")
    state = SystemState(agents, env, 0, int(run_data.get("seed", 0)))
    max_cycles = run_data.get("max_cycles")
    return Scenario(state, None if max_cycles is None else int(max_cycles), stop, path)


def _load_agent(entry: dict, base: Path) -> AgentConfiguration:
    name = str(entry["name"])
    source = entry.get("source")
    if source is None:
        program_path = entry.get("program")
        if program_path is None:
            raise ConfigError(f"agent {name} needs 'program' or 'source'")
        try:
            source = (base / program_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"agent {name}: {exc}") from None
    try:
        prog = parse_agent(source, name)
    except ParseError as exc:
        raise ConfigError(f"agent {name}: {exc}") from None
    try:
        policies = Policies.named(**(entry.get("policies") or {}))
        socacc = SocAccPolicy.from_config(entry.get("socacc"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"agent {name}: {exc}") from None
    cfg = AgentConfiguration.from_program(prog, policies, socacc)
    for g in _atoms(entry.get("goals"), f"goals of {name}"):
        cfg = cfg.with_goal(g)
    for text in entry.get("events") or ():
        try:
            cfg = cfg.with_event(parse_trigger(str(text)))
        except ParseError as exc:
            raise ConfigError(f"agent {name}: bad event {text!r}: {exc}") from None
    return cfg
