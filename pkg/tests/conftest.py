import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ringsynth.pspec import builtin_corpus
from ringsynth.synth import synthesize_loop
from ringsynth.transforms import prepare_for_synthesis


@pytest.fixture(scope="session")
def arbiter_synthesis():
    """Synthesize the toy arbiter once per session; several suites reuse it."""
    hub = prepare_for_synthesis(builtin_corpus("simple_arbiter"))
    result = synthesize_loop(hub, max_bound=4)
    assert result.status == "ok"
    return result


@pytest.fixture(scope="session")
def arbiter_template(arbiter_synthesis):
    return arbiter_synthesis.template
