import math

import numpy as np
import pytest

from hessdisc import corpus as corpus_mod
from hessdisc.fields import field_from_spec
from hessdisc.indicatrix import ChainConfig, equality_certificate, inequality_chain, scan_levels


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` prints and records one pass/fail line, then asserts."""

    def report(n, ok, detail):
        line = f"[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        ACCEPTANCE_LINES.append(line)
        assert ok, line

    return report


@pytest.fixture(scope="session")
def paraboloid():
    return field_from_spec({"kind": "paraboloid"})


@pytest.fixture(scope="session")
def exp_radial():
    return field_from_spec({"kind": "exp-radial"})


@pytest.fixture(scope="session")
def quartic():
    return field_from_spec({"kind": "quartic"})


@pytest.fixture(scope="session")
def two_bump():
    return field_from_spec({"kind": "two-bump"})


@pytest.fixture(scope="session")
def corpus():
    return corpus_mod.corpus()


class CorpusRuns:
    """Lazily computed scans, chain reports and certificates, shared per session."""

    def __init__(self, corpus):
        self.corpus = corpus
        self.cfg = ChainConfig()
        self._scan, self._chain, self._cert = {}, {}, {}

    def scan(self, name):
        if name not in self._scan:
            self._scan[name] = scan_levels(self.corpus[name][0], self.cfg, with_stats=True)
        return self._scan[name]

    def chain(self, name):
        if name not in self._chain:
            self._chain[name] = inequality_chain(self.corpus[name][0], self.cfg, check=False, scan=self.scan(name))
        return self._chain[name]

    def certificate(self, name):
        if name not in self._cert:
            mass = self.chain(name).hessian_term * 2 * math.pi
            self._cert[name] = equality_certificate(self.corpus[name][0], self.cfg, scan=self.scan(name), mass=mass)
        return self._cert[name]


@pytest.fixture(scope="session")
def runs(corpus):
    return CorpusRuns(corpus)


def circle_polyline(r=0.5, n=512, center=(0.0, 0.0)):
    th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])


def rounded_square(half=0.5, radius=0.1, n_side=200, n_corner=50):
    """Counter-clockwise square with circular corners."""
    pts = []
    a = half - radius
    corners = [(a, -a, -np.pi / 2), (a, a, 0.0), (-a, a, np.pi / 2), (-a, -a, np.pi)]
    for k, (cx, cy, th0) in enumerate(corners):
        nx_, ny_ = corners[(k + 1) % 4][:2]
        th = th0 + np.linspace(0.0, np.pi / 2, n_corner, endpoint=False)
        pts.append(np.column_stack([cx + radius * np.cos(th), cy + radius * np.sin(th)]))
        end_th = th0 + np.pi / 2
        p0 = np.array([cx + radius * np.cos(end_th), cy + radius * np.sin(end_th)])
        p1 = np.array([nx_ + radius * np.cos(end_th), ny_ + radius * np.sin(end_th)])
        s = np.linspace(0.0, 1.0, n_side, endpoint=False)
        # flat side up to the next corner
        pts.append(p0[None, :] + s[:, None] * (p1 - p0)[None, :])
    return np.vstack(pts)


def figure_eight(n=800):
    th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
    return np.column_stack([np.sin(th), np.sin(th) * np.cos(th)])
