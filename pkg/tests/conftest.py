from __future__ import annotations

from pathlib import Path

import pytest

from agentspeak.agent import AgentConfiguration
from agentspeak.syntax import parse_agent

PROGRAMS = Path(__file__).resolve().parents[1] / "src" / "agentspeak" / "programs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def program_text(name: str) -> str:
    return (PROGRAMS / name).read_text(encoding="utf-8")


def agent_from(source: str, name: str = "ag", **kwargs) -> AgentConfiguration:
    return AgentConfiguration.from_program(parse_agent(source, name), **kwargs)


@pytest.fixture
def programs() -> Path:
    return PROGRAMS


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
