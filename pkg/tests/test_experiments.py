import csv
import json

import pytest

from adxsim.experiments import (ExperimentResult, ExperimentSpec,
                                REPLICATION_COLUMNS, SummaryStats,
                                emit_report, run_exp1_ga_vs_gsp,
                                run_exp1_income, run_exp2, run_grid)


def tiny_spec(experiment, **kw):
    base = dict(experiment=experiment, network_counts=[2],
                replications=3, scale_factor=0.01, base_seed=5)
    base.update(kw)
    return ExperimentSpec(**base)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSummaryStats:
    def test_from_values(self):
        s = SummaryStats.from_values([1.0, 2.0, 3.0])
        assert (s.min, s.mean, s.max) == (1.0, 2.0, 3.0)
        assert s.std_dev == pytest.approx(1.0)

    def test_single_value(self):
        s = SummaryStats.from_values([4.2])
        assert s.min == s.mean == s.max == 4.2
        assert s.std_dev == 0.0

    def test_ordering_enforced(self):
        with pytest.raises(ValueError):
            SummaryStats(max=1.0, mean=2.0, min=0.0, std_dev=0.1)


class TestSpecValidation:
    def test_rejects_unknown_experiment(self):
        with pytest.raises(ValueError):
            ExperimentSpec(experiment="nope")

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            tiny_spec("exp1_income", scale_factor=1.5)

    def test_scaling_floors(self):
        spec = tiny_spec("exp1_income", scale_factor=0.01)
        assert spec.scaled_visits() == 1500
        assert spec.scaled_population() == 10
        assert spec.scaled_generations() == 10

    def test_full_scale(self):
        spec = tiny_spec("exp1_income", scale_factor=1.0)
        assert spec.scaled_visits() == 150_000
        assert spec.scaled_population() == 100
        assert spec.scaled_generations() == 100


class TestExp1Income:
    def test_pairing_and_uplift(self):
        result = run_exp1_income(tiny_spec("exp1_income", network_counts=[3],
                                           replications=5))
        rows = result.replication_rows
        assert len(rows) == 10
        wins = 0
        for rep in range(5):
            pair = [r for r in rows if r["replication"] == rep]
            indep = next(r for r in pair if r["mode"] == "gsp_independent")
            collab = next(r for r in pair if r["mode"] == "gsp_collaborative")
            assert indep["seed"] == collab["seed"]
            wins += collab["income"] >= indep["income"]
        assert wins >= 4  # collaborative >= independent in >= 80% of pairs

    def test_single_network_modes_coincide(self):
        result = run_exp1_income(tiny_spec("exp1_income", network_counts=[1],
                                           replications=3))
        for rep in range(3):
            pair = [r for r in result.replication_rows if r["replication"] == rep]
            incomes = {r["mode"]: r["income"] for r in pair}
            assert incomes["gsp_independent"] == incomes["gsp_collaborative"]

    def test_summary_means_match_rows(self, tmp_path):
        result = run_exp1_income(tiny_spec("exp1_income"))
        paths = emit_report(result, "csv", str(tmp_path))
        rows = read_csv(paths[0])
        summary = read_csv(paths[1])[0]
        collab = [float(r["income"]) for r in rows
                  if r["mode"] == "gsp_collaborative"]
        assert float(summary["collaborative_income"]) == pytest.approx(
            sum(collab) / len(collab), abs=1e-9)

    def test_seed_changes_values_not_schema(self):
        a = run_exp1_income(tiny_spec("exp1_income"))
        b = run_exp1_income(tiny_spec("exp1_income", base_seed=6))
        assert len(a.replication_rows) == len(b.replication_rows)
        assert list(a.replication_rows[0]) == list(b.replication_rows[0])
        assert a.replication_rows != b.replication_rows


class TestParallelism:
    def test_worker_processes_do_not_change_results(self):
        serial = run_exp1_income(tiny_spec("exp1_income", replications=4))
        parallel = run_exp1_income(tiny_spec("exp1_income", replications=4,
                                             jobs=2))
        assert serial.replication_rows == parallel.replication_rows
        assert serial.summary_rows == parallel.summary_rows


class TestEmitReport:
    def test_deterministic_bytes(self, tmp_path):
        spec = tiny_spec("exp1_income")
        r1 = run_exp1_income(spec)
        r2 = run_exp1_income(spec)
        p1 = emit_report(r1, "csv", str(tmp_path / "a"))
        p2 = emit_report(r2, "csv", str(tmp_path / "b"))
        for a, b in zip(p1, p2):
            assert open(a, "rb").read() == open(b, "rb").read()

    def test_header_only_for_empty_results(self, tmp_path):
        empty = ExperimentResult(name="exp1_income", replication_rows=[],
                                 summary_rows=[], summary_columns=["n_networks"])
        paths = emit_report(empty, "csv", str(tmp_path))
        lines = open(paths[0]).read().splitlines()
        assert lines == [",".join(REPLICATION_COLUMNS)]

    def test_csv_and_json_encode_identical_numbers(self, tmp_path):
        result = run_exp1_income(tiny_spec("exp1_income"))
        csv_paths = emit_report(result, "csv", str(tmp_path / "c"))
        json_paths = emit_report(result, "json", str(tmp_path / "j"))
        rows_csv = read_csv(csv_paths[0])
        rows_json = json.load(open(json_paths[0]))["rows"]
        assert len(rows_csv) == len(rows_json)
        for rc, rj in zip(rows_csv, rows_json):
            for col in ("income", "fitness", "pen1", "pen5"):
                assert abs(float(rc[col]) - rj[col]) < 1e-9

    def test_rejects_unknown_format(self, tmp_path):
        result = ExperimentResult("exp1_income", [], [], ["x"])
        with pytest.raises(ValueError):
            emit_report(result, "xml", str(tmp_path))


class TestExp1GaVsGsp:
    def test_rows_and_summary(self):
        result = run_exp1_ga_vs_gsp(tiny_spec("exp1_ga_vs_gsp",
                                              network_counts=[2],
                                              replications=2))
        rows = result.replication_rows
        assert len(rows) == 4
        assert {r["mode"] for r in rows} == {"ga", "gsp_collaborative"}
        for row in rows:
            pens = sum(row[f"pen{k}"] for k in range(1, 6))
            # columns are individually rounded to cents
            assert abs(row["fitness"] - (row["income"] - pens)) < 0.05
            if row["mode"] == "ga":
                thetas = [row[f"theta{k}"] for k in range(1, 7)]
                assert abs(sum(thetas) - 1.0) < 1e-9
            else:
                assert row["theta1"] == ""
        summary = result.summary_rows[0]
        assert set(summary) == {"n_networks", "ga_fitness", "gsp_fitness"}


class TestExp2:
    def test_summary_shape(self):
        result = run_exp2(tiny_spec("exp2_coeff", replications=2))
        row = result.summary_rows[0]
        assert row["x2"] == 3.0
        assert row["watched_theta_index"] == 3
        assert row["fitness_min"] <= row["fitness_mean"] <= row["fitness_max"]
        assert 0.0 <= row["watched_theta_argmax_share"] <= 1.0
        thetas = [row[f"theta{k}"] for k in range(1, 7)]
        assert abs(sum(thetas) - 1.0) < 1e-9

    def test_advertiser_theta_reading_watches_second_weight(self):
        result = run_exp2(tiny_spec("exp2_coeff", replications=1,
                                    theta_reading="advertiser"))
        assert result.summary_rows[0]["watched_theta_index"] == 2


class TestGrid:
    def test_tiny_grid_shape_and_argmax(self):
        result = run_grid(tiny_spec("grid", replications=1))
        matrix = result.extra["matrix"]
        assert len(matrix) == 10 and all(len(r) == 10 for r in matrix)
        flat = [v for row in matrix for v in row]
        assert all(isinstance(v, float) for v in flat)
        summary = result.summary_rows[0]
        assert summary["best_cell_mean"] == max(flat)
        assert summary["best_cell_mean"] >= summary["grand_mean"]
        assert len(result.replication_rows) == 100

    def test_matrix_file(self, tmp_path):
        result = run_grid(tiny_spec("grid", replications=1))
        paths = emit_report(result, "csv", str(tmp_path))
        matrix_rows = read_csv(paths[2])
        assert len(matrix_rows) == 10
        assert len(matrix_rows[0]) == 11
