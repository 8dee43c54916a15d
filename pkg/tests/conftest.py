"""Shared fixtures and suite-wide checks.

Every clustering run in the suite goes through wrappers installed here:
each cluster's round count is checked against the analytic bound and every
post-processing pass is checked not to lower the objective.  A violation
fails the test that triggered it.
"""

import contextlib
import functools
import warnings

import numpy as np
import pytest

import pskc
from pskc import cli, engine, evaluation

warnings.filterwarnings("ignore", message=".*TBB.*")

RUN_STATS = {"clusterings": 0, "clusters": 0, "post_passes": 0}
_ACCEPTANCE = {}


def _check_bound(result):
    bound = engine.max_iterations(result.tau, result.rho)
    for j, used in enumerate(result.per_cluster_iterations):
        assert used <= bound, f"cluster {j} used {used} rounds, bound is {bound}"
    RUN_STATS["clusterings"] += 1
    RUN_STATS["clusters"] += len(result.per_cluster_iterations)


def _wrap_cluster_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        result = fn(*args, **kwargs)
        _check_bound(result)
        return result
    return wrapper


def _wrap_post_process(fn):
    @functools.wraps(fn)
    def wrapper(result, *args, **kwargs):
        after = fn(result, *args, **kwargs)
        assert after.objective >= result.objective, (
            f"post-processing lowered the objective: {result.objective} -> {after.objective}"
        )
        RUN_STATS["post_passes"] += 1
        return after
    return wrapper


def pytest_configure(config):
    engine.cluster_codes = _wrap_cluster_codes(engine.cluster_codes)
    wrapped_post = _wrap_post_process(engine.post_process)
    for mod in (engine, evaluation, cli, pskc):
        mod.post_process = wrapped_post


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    if _ACCEPTANCE:
        tr.section("acceptance criteria")
        for num in sorted(_ACCEPTANCE):
            tr.write_line(_ACCEPTANCE[num])
    tr.write_line(
        f"suite-wide checks: {RUN_STATS['clusterings']} clustering runs, "
        f"{RUN_STATS['clusters']} clusters within the round bound, "
        f"{RUN_STATS['post_passes']} post-processing passes without objective loss"
    )


class _Criterion:
    def __init__(self, num, title):
        self.num = num
        self.title = title
        self.detail = ""


@pytest.fixture
def criterion():
    """Context manager recording one acceptance criterion as PASS or FAIL."""

    @contextlib.contextmanager
    def record(num, title):
        c = _Criterion(num, title)
        try:
            yield c
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
            _ACCEPTANCE[num] = f"criterion {num:>2} FAIL  {title}: {c.detail} [{msg}]"
            print(_ACCEPTANCE[num])
            raise
        _ACCEPTANCE[num] = f"criterion {num:>2} PASS  {title}: {c.detail}"
        print(_ACCEPTANCE[num])

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def two_blobs():
    """Two tight, far-apart Gaussian blobs of 100 points each."""
    g = np.random.default_rng(3)
    a = g.normal((0.0, 0.0), 0.05, (100, 2))
    b = g.normal((5.0, 5.0), 0.05, (100, 2))
    return np.vstack([a, b]), np.repeat([0, 1], 100)
