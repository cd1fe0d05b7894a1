import csv
import io
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from memtele.cli import (
    COLUMNS,
    ResultRow,
    emit_results,
    format_results,
    main,
    read_results,
    run_budget,
    run_fig3,
    run_table1,
)
from memtele.config import RunConfig, build_config, load_config
from memtele.errors import InvariantViolation, ParseError, UnknownKey
from memtele.sources import default_params


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestConfig:
    def test_empty_config_defaults(self, tmp_path):
        cfg = load_config(write(tmp_path, "experiment = budget\n"))
        assert cfg.params == default_params()
        assert cfg.experiment == "budget"

    def test_comments_and_overrides(self, tmp_path):
        cfg = load_config(write(tmp_path, "# a comment\n\nexperiment = fig3  # inline\nstorage_times = 0.5, 4\n"
                                          "eta_det = 0.4\nseed = 18446744073709551615\n"))
        assert cfg.params.eta_det == 0.4
        assert cfg.storage_times == (0.5, 4.0)
        assert cfg.seed == 2**64 - 1

    def test_invariant_names_field(self, tmp_path):
        with pytest.raises(InvariantViolation) as exc:
            load_config(write(tmp_path, "eta_det = 1.5\n"))
        assert exc.value.field == "eta_det"

    @pytest.mark.parametrize("text,field", [("trials = 0", "trials"), ("workers = 0", "workers"),
                                            ("seed = -1", "seed"), ("experiment = fig3\nstorage_times = ", "storage_times"),
                                            ("format = xml", "format")])
    def test_run_invariants(self, tmp_path, text, field):
        with pytest.raises(InvariantViolation) as exc:
            load_config(write(tmp_path, text + "\n"))
        assert exc.value.field == field

    def test_unknown_key(self, tmp_path):
        with pytest.raises(UnknownKey):
            load_config(write(tmp_path, "etta = 0.5\n"))

    @pytest.mark.parametrize("text", ["eta_det 0.5", "eta_det = half", "= 3", "trials = 1.5"])
    def test_parse_errors(self, tmp_path, text):
        with pytest.raises(ParseError):
            load_config(write(tmp_path, text + "\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ParseError):
            load_config(tmp_path / "nope.cfg")

    def test_deterministic(self, tmp_path):
        path = write(tmp_path, "experiment = table1\nzeta = 0.8\n")
        assert load_config(path) == load_config(path)


class TestEmit:
    def test_header_only(self, tmp_path):
        path = tmp_path / "out.csv"
        emit_results([], path, "csv")
        assert path.read_text() == ",".join(COLUMNS) + "\n"

    def test_budget_rows(self):
        table = run_budget(RunConfig())
        assert [r.input_state for r in table.rows] == ["H", "+", "R"]
        assert [r.reference_value for r in table.rows] == [0.865, 0.737, 0.750]
        assert table.rows[0].oracle_fidelity == pytest.approx(0.90, abs=0.01)

    @settings(max_examples=25)
    @given(st.lists(st.builds(
        ResultRow,
        experiment=st.sampled_from(["table1", "fig3"]),
        input_state=st.sampled_from(["H", "+", "R"]),
        storage_time_us=st.floats(0, 20),
        mc_fidelity=st.none() | st.floats(0, 1),
        mc_stderr=st.none() | st.floats(0, 1),
        oracle_fidelity=st.floats(0, 1),
        reference_value=st.none() | st.floats(0, 1),
        n_effective_trials=st.none() | st.floats(1, 1e6),
        seed=st.integers(0, 2**64 - 1),
    ), max_size=5), st.sampled_from(["csv", "json"]))
    def test_round_trip(self, rows, fmt):
        text = format_results(rows, fmt)
        assert text.endswith("\n")
        assert read_results(text, fmt) == rows


class TestRunners:
    def test_ideal_table1(self):
        cfg = build_config({"experiment": "table1", "trials": "300", "chi": "1e-8", "mu": "1e-4", "gamma0": "1",
                            "eta_coll": "1", "eta_det": "1", "dark_prob": "0", "zeta": "1", "phase_sigma": "0",
                            "background_s": "0", "spin_depolarization": "0"})
        table = run_table1(cfg)
        assert [f"{r.mc_fidelity:.3f}" for r in table.rows] == ["1.000"] * 3
        assert all(r.n_effective_trials >= 300 for r in table.rows)

    def test_fig3_flat_without_noise(self):
        cfg = build_config({"experiment": "fig3", "trials": "200", "storage_times": "0.5, 5, 10", "chi": "1e-8",
                            "mu": "1e-4", "gamma0": "1", "tau_mem": "1e6", "eta_coll": "1", "eta_det": "1",
                            "dark_prob": "0", "zeta": "1", "phase_sigma": "0", "background_s": "0",
                            "spin_depolarization": "0"})
        table = run_fig3(cfg)
        assert all(r.mc_fidelity == 1.0 for r in table.rows)
        assert all(r.mc_stderr is not None and r.n_effective_trials for r in table.rows)


class TestMain:
    def test_budget_stdout(self, capsys):
        assert main(["--experiment", "budget"]) == 0
        rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
        assert [r["input_state"] for r in rows] == ["H", "+", "R"]

    def test_config_error_exit(self, capsys):
        assert main(["--experiment", "budget", "--set", "eta_det=1.5"]) == 2
        assert "eta_det" in capsys.readouterr().err

    def test_unknown_key_exit(self):
        assert main(["--experiment", "budget", "--set", "nonsense=1"]) == 2

    def test_runtime_error_exit(self, tmp_path):
        assert main(["--experiment", "budget", "--output", str(tmp_path / "missing" / "x.csv")]) == 3

    def test_json_file(self, tmp_path):
        out = tmp_path / "b.json"
        cfg = write(tmp_path, "experiment = budget\nseed = 5\n")
        assert main(["--config", str(cfg), "--format", "json", "--output", str(out)]) == 0
        rows = json.loads(out.read_text())
        assert rows[0]["seed"] == 5 and set(rows[0]) == set(COLUMNS)

    def test_flags_override_config(self, tmp_path):
        out = tmp_path / "b.csv"
        cfg = write(tmp_path, "experiment = bell-check\nseed = 1\n")
        assert main(["--config", str(cfg), "--experiment", "budget", "--seed", "2", "--output", str(out)]) == 0
        assert out.read_text().splitlines()[1].startswith("budget,")

    def test_byte_identical_across_workers(self, tmp_path):
        outs = []
        for workers in ("1", "2"):
            out = tmp_path / f"t{workers}.csv"
            assert main(["--experiment", "table1", "--trials", "1500", "--seed", "11", "--workers", workers,
                         "--output", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
