import re
import sys

import numpy as np
import pytest

from scorekit.embeddings import EmbeddingSet
from scorekit.synth import synth_verification_fixture


@pytest.fixture(scope="session")
def fixture_small():
    """Shared separable protocol fixture (moderate channel effect)."""
    return synth_verification_fixture(
        seed=13,
        n_speakers=20,
        n_test_per_speaker=3,
        dim=24,
        cl_dim=32,
        n_cohort=60,
        channel_strength=0.6,
        noise=0.4,
        cl_noise=0.25,
        hotness=0.3,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240)


def random_embedding_set(rng, prefix, n, dim):
    ids = tuple(f"{prefix}{i:04d}" for i in range(n))
    return EmbeddingSet(ids, rng.standard_normal((n, dim)))


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    m = re.search(r"test_criterion_(\d+)", report.nodeid)
    if m is None:
        return
    status = "PASS" if report.passed else "FAIL"
    name = report.nodeid.split("::")[-1]
    sys.stderr.write(f"\n[acceptance] criterion {m.group(1)}: {status} ({name})\n")
