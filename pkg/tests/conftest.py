from datetime import datetime, timezone

import numpy as np
import pytest

from dhstream.events import build_stream

ORIGIN = datetime(2020, 1, 1, tzinfo=timezone.utc)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def make_stream():
    """Build a stream from (t, vendor, {word: count}, truth) tuples."""
    def _make(rows, horizon=None):
        return build_stream([(t, "J***e", v, bag, lab) for t, v, bag, lab in rows], ORIGIN, horizon)
    return _make


def pytest_sessionstart(session):
    import time
    session.config._dhstream_session_start = time.time()


def pytest_collection_modifyitems(config, items):
    # acceptance criteria run last so the final one can time the whole session
    items.sort(key=lambda item: item.module.__name__ == "test_acceptance")


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[number])
