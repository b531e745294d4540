import numpy as np
import pytest

from estrace.cmaes import variant_config
from estrace.problems import make_problem
from estrace.trace import run_and_trace


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def short_trace():
    """One 80-generation sphere trace shared by read-only tests."""
    cfg = variant_config("standard", 4, budget_generations=80)
    problem = make_problem(1, 4, transform_seed=1)
    return run_and_trace(
        cfg, problem, np.random.SeedSequence(5), variant="standard", run=0
    )


@pytest.fixture(scope="session")
def variant_traces():
    """Short traces for three structurally different variants."""
    out = {}
    for variant in ("standard", "tpa", "halton"):
        cfg = variant_config(variant, 3, budget_generations=60)
        problem = make_problem(8, 3, transform_seed=2)
        out[variant] = run_and_trace(
            cfg, problem, np.random.SeedSequence(9), variant=variant, run=0
        )
    return out
