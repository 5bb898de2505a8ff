import numpy as np
import pytest

from zsda.grassmann import make_subspace, random_subspace
from zsda.synth import SynthConfig, generate_synthetic


def line(angle):
    """The line through the origin at ``angle`` radians in R^2."""
    return make_subspace([[np.cos(angle)], [np.sin(angle)]])


def line_angle(p):
    """Angle in [0, pi) of a line in R^2."""
    x, y = p.basis[:, 0]
    return float(np.arctan2(y, x) % np.pi)


def random_pair(rng, d, k):
    return random_subspace(d, k, rng), random_subspace(d, k, rng)


def random_orthogonal(rng, k):
    q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def synth_manifest(tmp_path_factory):
    """Small 3x3 grid on disk, cheap enough for unit tests."""
    out = tmp_path_factory.mktemp("synth")
    cfg = SynthConfig(num_classes=4, ambient_dim=16, samples_per_class=12, seed=3)
    return generate_synthetic(cfg, out)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    lines = getattr(test_acceptance, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for msg in lines:
            terminalreporter.write_line(msg)
