"""An interpreter for AgentSpeak agents that communicate through speech acts."""

from __future__ import annotations

from .agent import AgentConfiguration, Event, Intention, Policies, Step, Stuck, step
from .beliefs import BeliefBase
from .comms import Message, Performative, SocAccPolicy, SocAccRule
from .syntax import ParseError, parse_agent, render
from .system import Environment, SystemState, load_scenario, run

__all__ = [
    "AgentConfiguration",
    "BeliefBase",
    "Environment",
    "Event",
    "Intention",
    "Message",
    "ParseError",
    "Performative",
    "Policies",
    "SocAccPolicy",
    "SocAccRule",
    "Step",
    "Stuck",
    "SystemState",
    "load_scenario",
    "parse_agent",
    "render",
    "run",
    "step",
]

__version__ = "0.1.0"
