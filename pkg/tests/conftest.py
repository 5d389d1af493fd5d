import json

import pytest
from hypothesis import settings

from synth.lang import Dsl
from synth.pbe import pbe_dsl
from synth.pendulum import expert_program, pendulum_dsl

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def make_dsl(*entries):
    """Entries as (name, type, impl) triples."""
    return Dsl.from_dict({"entries": [{"name": n, "type": t, "impl": i} for n, t, i in entries]})


@pytest.fixture(scope="session")
def pend_dsl():
    return pendulum_dsl()


@pytest.fixture(scope="session")
def ext_dsl():
    return pendulum_dsl(extended=True)


@pytest.fixture(scope="session")
def pbe():
    return pbe_dsl()


@pytest.fixture(scope="session")
def expert(pend_dsl):
    return expert_program(pend_dsl)


@pytest.fixture
def micro_path(tmp_path):
    p = tmp_path / "micro.json"
    p.write_text(json.dumps({"entries": [
        {"name": "true", "type": "Bool", "impl": "const:true"},
        {"name": "not", "type": "Bool -> Bool", "impl": "builtin:not"},
    ]}))
    return p


ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
