"""Experiment harness: config handling, seeded runs, metrics, CSV emission."""

import csv
import hashlib
import json

import numpy as np
import pytest

from jamauction import harness
from jamauction.envsim import step_occupancy, step_snr, transmission_rate
from jamauction.harness import (
    CSV_HEADER,
    ExperimentConfig,
    RunRecord,
    compute_theta,
    emit,
    meets_convergence_criterion,
    normalized_running_mean,
    run_experiment,
    run_replications,
    stages_to_criterion,
    sweep,
)


class TestConfig:
    def test_defaults_describe_the_baseline(self):
        config = ExperimentConfig()
        assert (config.n_sus, config.n_channels, config.buffer_cap) == (3, 2, 2)
        assert config.mean_arrivals == 0.5
        assert (config.mode, config.jammer) == ("pd", "minimax")
        assert (config.epsilon, config.beta) == (1.0, 0.5)
        assert (config.horizon, config.seed, config.reps) == (10_000, 1, 1)
        assert config.validate() == []

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ValueError, match="unknown config keys: bogus"):
            ExperimentConfig.from_dict({"n_sus": 2, "bogus": 1})

    def test_from_dict_rejects_invalid_values(self):
        with pytest.raises(ValueError, match="invalid config"):
            ExperimentConfig.from_dict({"mode": "hybrid"})

    def test_validate_collects_every_problem(self):
        problems = ExperimentConfig(n_sus=0, horizon=-1, mode="hybrid").validate()
        text = "; ".join(problems)
        assert "n_sus" in text
        assert "horizon" in text
        assert "mode" in text

    def test_deviation_fields_must_pair_up(self):
        assert any(
            "together" in p for p in ExperimentConfig(deviation_su=0).validate()
        )
        assert any(
            "together" in p for p in ExperimentConfig(deviation_kind="noise").validate()
        )
        assert any(
            "deviation_kind" in p
            for p in ExperimentConfig(deviation_su=0, deviation_kind="lie").validate()
        )
        assert any(
            "deviation_su" in p
            for p in ExperimentConfig(deviation_su=7, deviation_kind="noise").validate()
        )

    def test_json_round_trip_preserves_every_field(self):
        config = ExperimentConfig(n_channels=3, mean_arrivals=0.25, seed=9)
        assert ExperimentConfig.from_json(config.to_json()) == config

    def test_config_hash_is_stable_and_field_sensitive(self):
        config = ExperimentConfig()
        assert config.config_hash() == ExperimentConfig().config_hash()
        assert len(config.config_hash()) == 16
        int(config.config_hash(), 16)  # hex digest prefix
        assert config.config_hash() != ExperimentConfig(seed=2).config_hash()

    def test_run_experiment_refuses_invalid_configs(self):
        with pytest.raises(ValueError, match="invalid config"):
            run_experiment(ExperimentConfig(mode="hybrid"))


class TestConvergenceMetrics:
    def test_constant_rate_meets_immediately(self):
        cum = np.array([1.0, 2.0, 3.0, 4.0])
        np.testing.assert_allclose(normalized_running_mean(cum), 1.0, atol=1e-12)
        assert stages_to_criterion(cum) == 1
        assert meets_convergence_criterion(cum)

    def test_late_jump_never_settles(self):
        cum = np.array([1.0, 2.0, 3.0, 10.0])
        assert stages_to_criterion(cum) == 4
        assert not meets_convergence_criterion(cum)

    def test_zero_curve_normalizes_to_zeros(self):
        np.testing.assert_array_equal(
            normalized_running_mean(np.zeros(5)), np.zeros(5)
        )

    def test_normalized_curve_ends_at_unit_magnitude(self):
        rng = np.random.default_rng(0)
        cum = np.cumsum(-rng.random(100))
        curve = normalized_running_mean(cum)
        assert abs(curve[-1]) == pytest.approx(1.0, abs=1e-12)

    def test_empty_run_is_handled(self):
        assert normalized_running_mean(np.zeros(0)).shape == (0,)
        assert stages_to_criterion(np.zeros(0)) == 0

    def test_criterion_is_the_first_stage_of_a_quiet_tail(self):
        curve_mean = np.ones(50)
        curve_mean[:10] = 2.0  # noisy head, quiet tail
        cum = curve_mean * np.arange(1, 51)
        assert stages_to_criterion(cum) == 11

    def test_compute_theta_from_stored_utilities(self):
        record = RunRecord(
            config_hash="x",
            run=0,
            seed=1,
            mode="pd",
            jam=np.zeros(2, dtype=np.int64),
            channel=-np.ones((2, 2), dtype=np.int64),
            utility=np.array([[-1, 0], [0, -1]]),
            payment=np.zeros((2, 2)),
            profit=np.zeros((2, 2)),
            theta_cum=np.array([0.5, 1.0]),
            cum_value=np.array([-1.0, -2.0]),
            norm_cum_value=np.array([-0.5, -1.0]),
        )
        total, per_stage = compute_theta(record)
        assert total == pytest.approx(1.0, abs=1e-12)
        assert per_stage == pytest.approx(0.5, abs=1e-12)
        assert record.theta_total == pytest.approx(total, abs=1e-12)
        assert record.theta_per_stage == pytest.approx(per_stage, abs=1e-12)


class TestRunExperiment:
    def test_zero_horizon_yields_an_empty_record(self):
        record = run_experiment(ExperimentConfig(horizon=0))
        assert record.horizon == 0
        assert record.theta_total == 0.0
        assert list(record.rows()) == []

    def test_no_arrivals_means_no_drops(self):
        record = run_experiment(ExperimentConfig(mean_arrivals=0.0, horizon=200))
        np.testing.assert_array_equal(record.utility, 0)
        assert record.theta_total == 0.0
        np.testing.assert_array_equal(record.norm_cum_value, 0.0)

    @pytest.mark.parametrize("mode", ["pd", "pc"])
    def test_jammer_is_blind_to_misreported_bids(self, mode, monkeypatch):
        # bids live on the control channel the attacker cannot read, so the
        # cube handed to the jammer holds true values min(buffer, rate) <= cap
        # even while one SU doubles every submission
        recorded = []
        real = harness._make_jam_select

        def spy(kind, cache, jam_rng, counts):
            select = real(kind, cache, jam_rng, counts)

            def wrapped(cube, idle):
                recorded.append(cube.max())
                return select(cube, idle)

            return wrapped

        monkeypatch.setattr(harness, "_make_jam_select", spy)
        config = ExperimentConfig(
            mode=mode, horizon=150, deviation_su=0, deviation_kind="scale_double"
        )
        run_experiment(config)
        assert recorded
        assert max(recorded) <= config.buffer_cap

    @pytest.mark.parametrize("mode", ["pd", "pc"])
    def test_runs_are_deterministic(self, mode):
        config = ExperimentConfig(mode=mode, horizon=250)
        a, b = run_experiment(config), run_experiment(config)
        np.testing.assert_array_equal(a.jam, b.jam)
        np.testing.assert_array_equal(a.channel, b.channel)
        np.testing.assert_array_equal(a.utility, b.utility)
        np.testing.assert_array_equal(a.payment, b.payment)
        np.testing.assert_array_equal(a.profit, b.profit)
        np.testing.assert_array_equal(a.theta_cum, b.theta_cum)

    def test_baseline_drop_rate_stays_well_below_arrivals(self):
        record = run_experiment(ExperimentConfig(horizon=2000))
        assert 0.0 < record.theta_per_stage < 0.5

    def test_replications_advance_the_seed(self):
        records = run_replications(ExperimentConfig(horizon=150, reps=3))
        assert [r.run for r in records] == [0, 1, 2]
        assert [r.seed for r in records] == [1, 2, 3]
        assert len({r.theta_total for r in records}) >= 2

    def test_pc_payments_satisfy_individual_rationality(self):
        record = run_experiment(ExperimentConfig(mode="pc", horizon=300))
        assert (record.payment >= 0.0).all()
        assert (record.profit >= -1e-9).all()
        unassigned = record.channel == -1
        assert (record.payment[unassigned] == 0.0).all()
        assert (record.profit[unassigned] == 0.0).all()

    @pytest.mark.parametrize(
        "mode,jammer",
        [("pd", "minimax"), ("pc", "minimax"), ("pd", "adaptive"), ("pc", "uniform")],
    )
    def test_records_are_consistent_with_an_independent_environment_replay(
        self, mode, jammer
    ):
        """Rebuild the environment stream from the seed alone and check every
        stored assignment, jam, utility and running metric against it."""
        config = ExperimentConfig(mode=mode, jammer=jammer, horizon=300)
        record = run_experiment(config)

        occupancy_model, snr_model, traffic, rate_params = config.models()
        n, m, cap = config.n_sus, config.n_channels, config.buffer_cap
        env_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(5)[0])
        rate_lookup = np.array(
            [transmission_rate(level, 0, None, rate_params) for level in snr_model.levels],
            dtype=np.int64,
        )

        occupancy = (
            env_rng.random(m) < occupancy_model.stationary_idle_fraction()
        ).astype(np.int64)
        snr_idx = env_rng.integers(0, snr_model.n_levels, size=(n, m))
        buffers = np.zeros(n, dtype=np.int64)
        theta_acc = 0.0
        value_acc = 0.0

        for t in range(config.horizon):
            idle = set(int(j) for j in np.flatnonzero(occupancy == 1))
            assigned = {
                s: int(record.channel[t, s])
                for s in range(n)
                if record.channel[t, s] >= 0
            }
            if idle:
                assert record.jam[t] in idle
            else:
                assert record.jam[t] == -1
                assert not assigned
            assert set(assigned.values()) <= idle
            assert len(set(assigned.values())) == len(assigned)

            g = np.zeros(n, dtype=np.int64)
            for s, c in assigned.items():
                if c != record.jam[t]:
                    g[s] = rate_lookup[snr_idx[s, c]]
            arrivals = env_rng.poisson(traffic.mean_arrivals)
            drops = np.maximum(buffers - g - cap + arrivals, 0)
            np.testing.assert_array_equal(record.utility[t], -drops)
            buffers = np.minimum(np.maximum(buffers - g, 0) + arrivals, cap)

            theta_acc += float(drops.sum()) / n
            value_acc -= float(drops.sum())
            assert record.theta_cum[t] == pytest.approx(theta_acc, abs=1e-9)
            assert record.cum_value[t] == pytest.approx(value_acc, abs=1e-9)

            occupancy = step_occupancy(occupancy, occupancy_model, env_rng)
            snr_idx = step_snr(snr_idx, snr_model, env_rng)


class TestEmission:
    def test_csv_round_trip(self, tmp_path):
        config = ExperimentConfig(horizon=300)
        record = run_experiment(config)
        paths = emit([record], tmp_path, config)

        lines = paths["runs"][0].read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + config.horizon * config.n_sus

        reader = csv.DictReader(lines)
        drops = np.zeros(config.horizon)
        for row in reader:
            t, su = int(row["t"]), int(row["su"])
            assert int(row["run"]) == 0
            assert int(row["seed"]) == config.seed
            assert row["mode"] == "pd"
            assert int(row["channel"]) == record.channel[t, su]
            assert int(row["jam"]) == record.jam[t]
            assert float(row["payment"]) == record.payment[t, su]
            assert float(row["theta_cum"]) == record.theta_cum[t]
            assert float(row["norm_cum_value"]) == record.norm_cum_value[t]
            drops[t] += -int(row["utility"]) / config.n_sus
        np.testing.assert_allclose(np.cumsum(drops), record.theta_cum, atol=1e-9)
        assert record.norm_cum_value[-1] in (-1.0, 0.0)

    def test_emission_is_bit_reproducible(self, tmp_path):
        config = ExperimentConfig(horizon=200)
        digests = []
        for sub in ("a", "b"):
            paths = emit(run_replications(config), tmp_path / sub, config)
            digests.append(hashlib.sha256(paths["runs"][0].read_bytes()).hexdigest())
        assert digests[0] == digests[1]

    def test_config_sidecar_mirrors_the_config(self, tmp_path):
        config = ExperimentConfig(horizon=0)
        paths = emit(run_replications(config), tmp_path, config)
        sidecar = json.loads(paths["config"].read_text())
        assert sidecar["config_hash"] == config.config_hash()
        assert ExperimentConfig.from_dict(sidecar["config"]) == config

    def test_zero_horizon_emits_header_only_run_csv(self, tmp_path):
        config = ExperimentConfig(horizon=0)
        paths = emit(run_replications(config), tmp_path, config)
        assert paths["runs"][0].read_text() == CSV_HEADER + "\n"

    def test_no_records_emit_header_only_summary(self, tmp_path):
        config = ExperimentConfig()
        paths = emit([], tmp_path, config)
        assert paths["runs"] == []
        lines = paths["summary"].read_text().splitlines()
        assert len(lines) == 1
        assert lines[0].startswith("config_hash,")

    def test_summary_aggregates_replications(self, tmp_path):
        config = ExperimentConfig(horizon=150, reps=2)
        records = run_replications(config)
        paths = emit(records, tmp_path, config)
        rows = list(csv.DictReader(paths["summary"].read_text().splitlines()))
        assert len(rows) == 1
        row = rows[0]
        assert row["config_hash"] == config.config_hash()
        assert int(row["reps"]) == 2
        expected = np.mean([r.theta_per_stage for r in records])
        assert float(row["theta_per_stage_mean"]) == pytest.approx(expected, abs=1e-12)

    def test_sweep_writes_per_value_runs_and_a_flat_table(self, tmp_path):
        config = ExperimentConfig(horizon=120)
        path = sweep(config, "buffer_cap", [1, 2], tmp_path)
        rows = list(csv.DictReader(path.read_text().splitlines()))
        assert [r["value"] for r in rows] == ["1", "2"]
        assert all(r["param"] == "buffer_cap" for r in rows)
        for value in (1, 2):
            sub = tmp_path / f"buffer_cap={value}"
            assert (sub / "run_000.csv").exists()
            assert (sub / "config.json").exists()
            assert (sub / "summary.csv").exists()

    def test_sweep_rejects_unknown_fields_and_bad_values(self, tmp_path):
        config = ExperimentConfig(horizon=10)
        with pytest.raises(ValueError, match="unknown config field"):
            sweep(config, "bandwidth", [1.0], tmp_path)
        with pytest.raises(ValueError, match="invalid config at mode=hybrid"):
            sweep(config, "mode", ["hybrid"], tmp_path)
