"""Batch experiment runners: CSV outputs, reproducibility, sweep invariants."""

import csv
import math
from dataclasses import replace

import pytest

from swiptbeam.config import baseline_params
from swiptbeam.experiments import (
    CSV_FIELDS,
    ExperimentConfig,
    run_cdf,
    run_k_sweep,
    run_rmin_sweep,
)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def strip_volatile(rows):
    """Drop the one column that may differ between identical runs."""
    return [{k: v for k, v in r.items() if k != "wallclock_s"} for r in rows]


@pytest.fixture(scope="module")
def cdf_small(tmp_path_factory):
    """Nt=4 mixed-feasibility run shared by the structure tests."""
    out = tmp_path_factory.mktemp("cdf") / "rows.csv"
    base = baseline_params(nt=4, num_ehr=2, num_pu=1, r_min=0.5)
    config = ExperimentConfig(
        base=base, num_realizations=3, seed=2024, grid_points=20,
        output_path=str(out),
    )
    return config, run_cdf(config)


class TestCdf:
    def test_csv_schema_is_pinned(self, cdf_small):
        config, _ = cdf_small
        with open(config.output_path, newline="") as fh:
            header = next(csv.reader(fh))
        assert header == CSV_FIELDS == [
            "realization", "seed", "nt", "k", "r_min", "xi_profile",
            "beta_opt", "tau_opt_W", "feasible", "rank_ratio_w",
            "rank_ratio_sigma", "wallclock_s",
        ]

    def test_rows_cover_both_arms(self, cdf_small):
        config, res = cdf_small
        rows = read_csv(config.output_path)
        assert len(rows) == 2 * config.num_realizations
        assert {r["xi_profile"] for r in rows} == {"robust", "perfect"}
        assert res["n_feasible"] >= 1
        for r in rows:
            assert r["feasible"] in {"0", "1"}
            if r["feasible"] == "1":
                assert float(r["tau_opt_W"]) > 0.0
            else:
                assert math.isnan(float(r["tau_opt_W"]))

    def test_cdf_companion_is_a_distribution(self, cdf_small):
        config, res = cdf_small
        path = config.output_path.replace(".csv", ".cdf.csv")
        rows = read_csv(path)
        for profile in ("robust", "perfect"):
            pts = [(float(r["tau_opt_W"]), float(r["cdf"]))
                   for r in rows if r["xi_profile"] == profile]
            if not pts:
                continue
            taus = [t for t, _ in pts]
            levels = [l for _, l in pts]
            assert taus == sorted(taus)
            assert levels == sorted(levels)
            assert levels[-1] == pytest.approx(1.0)
            assert all(0.0 < l <= 1.0 for l in levels)

    def test_perfect_csi_never_trails_robust(self, cdf_small):
        """Dropping the uncertainty balls enlarges the feasible set, so the
        perfect-CSI objective dominates realization by realization."""
        config, res = cdf_small
        by_arm = {}
        for r in res["rows"]:
            by_arm[(r["xi_profile"], r["realization"])] = r
        for real in range(config.num_realizations):
            rob = by_arm[("robust", real)]
            per = by_arm[("perfect", real)]
            if rob["feasible"]:
                assert per["feasible"]
                assert per["tau_opt_W"] >= rob["tau_opt_W"] - 1e-8


class TestReproducibility:
    def _run(self, tmp_path, name, seed=11):
        base = baseline_params(nt=3, num_ehr=2, num_pu=1, r_min=0.0)
        out = tmp_path / f"{name}.csv"
        config = ExperimentConfig(
            base=base, num_realizations=2, seed=seed, grid_points=12,
            output_path=str(out),
        )
        run_cdf(config)
        return read_csv(out)

    def test_identical_runs_are_bytewise_equal(self, tmp_path):
        a = self._run(tmp_path, "a")
        b = self._run(tmp_path, "b")
        assert strip_volatile(a) == strip_volatile(b)

    def test_worker_fanout_does_not_change_results(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SWIPT_THREADS", "1")
        serial = self._run(tmp_path, "serial")
        monkeypatch.setenv("SWIPT_THREADS", "2")
        fanned = self._run(tmp_path, "fanned")
        assert strip_volatile(serial) == strip_volatile(fanned)

    def test_seed_changes_results(self, tmp_path):
        a = self._run(tmp_path, "s1", seed=11)
        b = self._run(tmp_path, "s2", seed=12)
        assert strip_volatile(a) != strip_volatile(b)

    def test_zero_radius_arms_coincide(self, tmp_path):
        # with no uncertainty the "robust" and "perfect" arms are the same
        # problem and must produce identical numbers
        base = baseline_params(nt=3, num_ehr=2, num_pu=1, r_min=0.0)
        base = replace(base, xi_e=(0.0, 0.0), xi_p=(0.0,))
        out = tmp_path / "zero.csv"
        run_cdf(ExperimentConfig(
            base=base, num_realizations=2, seed=5, grid_points=12,
            output_path=str(out),
        ))
        rows = read_csv(out)
        pick = lambda profile: sorted(
            (r["realization"], r["beta_opt"], r["tau_opt_W"], r["feasible"])
            for r in rows if r["xi_profile"] == profile
        )
        assert pick("robust") == pick("perfect")


class TestRminSweep:
    def test_sweep_summary_and_monotonicity(self, tmp_path):
        base = baseline_params(nt=3, num_ehr=2, num_pu=1, r_min=0.5)
        out = tmp_path / "rmin.csv"
        config = ExperimentConfig(
            base=base, num_realizations=2, seed=7, grid_points=12,
            rmin_list=(0.0, 0.5, 1.0), output_path=str(out),
        )
        res = run_rmin_sweep(config)
        assert all(res["monotone"].values())
        assert set(res["monotone"]) == {(3, 0), (3, 1)}
        rates = [s["feasible_rate"] for s in res["summary"]]
        # no secrecy target is the easiest column: its rate tops the sweep
        assert rates[0] == max(rates)
        summary = read_csv(str(out).replace(".csv", ".summary.csv"))
        assert [float(s["r_min"]) for s in summary] == [0.0, 0.5, 1.0]

    def test_requires_target_list(self, tmp_path):
        base = baseline_params(nt=3, num_ehr=2, num_pu=1)
        config = ExperimentConfig(base=base, output_path=str(tmp_path / "x.csv"))
        with pytest.raises(ValueError, match="rmin_list"):
            run_rmin_sweep(config)


class TestKSweep:
    def test_nested_receivers_monotone(self, tmp_path):
        base = baseline_params(nt=4, num_ehr=2, num_pu=1, r_min=0.5)
        out = tmp_path / "k.csv"
        config = ExperimentConfig(
            base=base, num_realizations=2, seed=2024, grid_points=20,
            k_list=(1, 2), output_path=str(out),
        )
        res = run_k_sweep(config)
        assert all(res["monotone"].values())
        rates = [s["feasible_rate"] for s in res["summary"]]
        assert rates == sorted(rates, reverse=True)
        rows = read_csv(out)
        assert len(rows) == 2 * 2  # realizations x receiver counts
        assert {r["k"] for r in rows} == {"1", "2"}

    def test_base_must_carry_max_receivers(self, tmp_path):
        base = baseline_params(nt=4, num_ehr=2, num_pu=1)
        config = ExperimentConfig(
            base=base, k_list=(1, 2, 3), output_path=str(tmp_path / "x.csv")
        )
        with pytest.raises(ValueError, match="smaller than max k"):
            run_k_sweep(config)


class TestConfigValidation:
    def test_bad_fields(self, tmp_path):
        base = baseline_params(nt=3, num_ehr=2, num_pu=1)
        out = str(tmp_path / "x.csv")
        with pytest.raises(ValueError):
            ExperimentConfig(base=base, num_realizations=0, output_path=out)
        with pytest.raises(ValueError):
            ExperimentConfig(base=base, seed=-1, output_path=out)
        with pytest.raises(ValueError, match="ascending"):
            ExperimentConfig(base=base, nt_list=(6, 4), output_path=out)
        with pytest.raises(ValueError):
            ExperimentConfig(base=base, grid_step=0.0, output_path=out)
        with pytest.raises(ValueError):
            ExperimentConfig(base=base, grid_points=1, output_path=out)

    def test_nts_defaults_to_base(self):
        base = baseline_params(nt=3, num_ehr=2, num_pu=1)
        assert ExperimentConfig(base=base).nts == (3,)
        assert ExperimentConfig(base=base, nt_list=(4, 6)).nts == (4, 6)
