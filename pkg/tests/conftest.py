import numpy as np
import pytest
from hypothesis import settings

settings.register_profile('default', max_examples=40, deadline=None)
settings.load_profile('default')

ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then assert it."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def record(name, ok, detail=''):
        line = '%s %s%s' % ('PASS' if ok else 'FAIL', name,
                            ': ' + detail if detail else '')
        lines.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section('acceptance criteria')
        for line in lines:
            terminalreporter.write_line(line)
