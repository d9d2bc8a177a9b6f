"""Session-wide fixtures for the acceptance gate.

Two artifacts are expensive enough to build once and share: a batch of 50
feasible solved designs spanning antenna counts and rate targets (used by
the robustness audit and the rank-one checks), and a complete
100-realization CDF experiment (used by the distribution-dominance and
performance checks).  Unit-test modules do not request these, so plain
``pytest tests/test_<module>.py`` runs stay fast.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import pytest

from swiptbeam.builder import beta_bounds
from swiptbeam.config import baseline_params
from swiptbeam.design import DesignOutcome, design
from swiptbeam.experiments import ExperimentConfig, run_cdf
from swiptbeam.model import ChannelSet, SystemParams, generate_channels

ACCEPTANCE_SEED = 2024

# (nt, r_min, solved-instance quota): 50 total, K=3, M=2 everywhere.
BATCH_CELLS = (
    (4, 0.5, 13),
    (4, 1.5, 13),
    (6, 0.5, 12),
    (6, 1.5, 12),
)


@dataclass(frozen=True)
class SolvedInstance:
    """One feasible design together with everything needed to re-audit it."""

    params: SystemParams
    channels: ChannelSet
    realization: int
    outcome: DesignOutcome
    design_wallclock_s: float


def desk_grid_step(params: SystemParams, channels: ChannelSet) -> float:
    """Spacing that puts exactly 50 points on the leakage-cap interval."""
    lo, hi = beta_bounds(params, channels.h)
    return (hi - lo) / 49.0


@pytest.fixture(scope="session")
def solved_batch() -> list[SolvedInstance]:
    """50 feasible solved designs; realizations are scanned until each cell fills."""
    batch: list[SolvedInstance] = []
    for nt, r_min, quota in BATCH_CELLS:
        params = baseline_params(nt=nt, r_min=r_min)
        found = 0
        realization = 0
        while found < quota:
            if realization >= 20 * quota:
                raise RuntimeError(
                    f"could not collect {quota} feasible designs at "
                    f"nt={nt}, r_min={r_min} within {realization} draws"
                )
            channels = generate_channels(params, ACCEPTANCE_SEED, realization)
            t0 = time.perf_counter()
            out = design(params, channels, grid_step=desk_grid_step(params, channels))
            wallclock = time.perf_counter() - t0
            if out.feasible:
                batch.append(
                    SolvedInstance(params, channels, realization, out, wallclock)
                )
                found += 1
            realization += 1
    return batch


@pytest.fixture(scope="session")
def cdf_run(tmp_path_factory) -> dict:
    """Full robust-vs-perfect CDF experiment: Nt=6, R_min=1.5, 100 realizations."""
    out_path = tmp_path_factory.mktemp("acceptance_cdf") / "cdf.csv"
    config = ExperimentConfig(
        base=baseline_params(nt=6, r_min=1.5),
        num_realizations=100,
        seed=ACCEPTANCE_SEED,
        grid_points=50,
        output_path=str(out_path),
    )
    t0 = time.perf_counter()
    result = run_cdf(config)
    result["wallclock_s"] = time.perf_counter() - t0
    result["output_path"] = str(out_path)
    return result
