import math

import numpy as np
from hypothesis import strategies as st

from sltrack.opinion import EvidenceVector, Opinion, opinion_from_evidence


@st.composite
def distributions(draw, w):
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=w, max_size=w))
    total = math.fsum(raw)
    return tuple(x / total for x in raw)


@st.composite
def evidence(draw, w=None, max_count=50.0):
    w = w or draw(st.integers(2, 6))
    counts = draw(st.lists(st.floats(0.0, max_count), min_size=w, max_size=w))
    return EvidenceVector(tuple(counts), float(w))


@st.composite
def opinions(draw, w=None, allow_vacuous=True):
    w = w or draw(st.integers(2, 6))
    ev = draw(evidence(w))
    if not allow_vacuous and ev.total == 0.0:
        ev = EvidenceVector((1.0,) + ev.counts[1:], ev.prior_weight)
    return opinion_from_evidence(ev, draw(distributions(w)))


def random_opinion(rng: np.random.Generator, w: int, base_rate=None) -> Opinion:
    counts = rng.exponential(5.0, size=w) * (rng.random(w) < 0.8)
    if base_rate is None:
        base_rate = rng.dirichlet(np.ones(w))
    return opinion_from_evidence(EvidenceVector(tuple(counts), float(w)), tuple(base_rate))


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
