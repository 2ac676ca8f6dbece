import json

import pytest

from eyehead.cli import DEFAULTS, build_parser, dispatch


def run(argv):
    return dispatch([str(a) for a in argv])


def synth_dir(tmp_path, participants=4, trials=2, shifts=12, seed=0):
    out = tmp_path / "raw"
    code = run([
        "synth", "--out-dir", out, "--participants", participants,
        "--trials", trials, "--shifts", shifts, "--seed", seed,
    ])
    assert code == 0
    return out / "traces"


def preprocess(tmp_path, raw, name="shifts.csv", extra=()):
    # synthetic trials are short, so lower the overlap sanity bar
    out = tmp_path / name
    code = run([
        "preprocess", "--in-dir", raw, "--out", out,
        "--min-overlap-s", 2.0, *extra,
    ])
    assert code == 0
    return out


class TestPipeline:
    def test_full_run_produces_every_artifact(self, tmp_path):
        raw = synth_dir(tmp_path)
        shifts = preprocess(tmp_path, raw)
        assert (tmp_path / "sanity.jsonl").exists()

        fits = tmp_path / "fits.json"
        assert run(["fit", "--in", shifts, "--out", fits, "--starts", 8]) == 0
        fit_rows = json.loads(fits.read_text())
        assert "provenance" in fit_rows[0]
        models = {r["model"] for r in fit_rows[1:]}
        assert models == {"linear", "hinge", "soft-hinge"}

        spectrum = tmp_path / "spectrum.json"
        assert run(["fpca", "--in", fits, "--out", spectrum]) == 0
        spec = json.loads(spectrum.read_text())
        assert set(spec) >= {"grid", "mean_curve", "components", "provenance"}

        scores = tmp_path / "scores.csv"
        assert run(["project", "--model", spectrum, "--in", fits, "--out", scores]) == 0
        lines = scores.read_text().splitlines()
        assert lines[0].startswith("# provenance:")
        assert lines[1].split(",")[0] == "curve_id"
        assert len(lines) == 2 + 4  # header rows + one per participant

        report_dir = tmp_path / "report"
        assert run([
            "report", "--fits", fits, "--spectrum", spectrum,
            "--scores", scores, "--out-dir", report_dir,
        ]) == 0
        for rel in ("summary.json", "summary.md", "scores.csv",
                    "pc1_density.csv", "modes/mean.csv"):
            assert (report_dir / rel).exists(), rel
        summary = json.loads((report_dir / "summary.json").read_text())
        assert summary["n_participants"] == 4
        assert set(summary["model_comparison"]) == {"linear", "hinge", "soft-hinge"}

    def test_sensitivity_command(self, tmp_path):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=30)
        out = tmp_path / "sens.json"
        code = run([
            "sensitivity", "--in-dir", raw, "--out", out,
            "--thresholds", "15,20", "--base-threshold", "15", "--starts", "6",
            "--min-overlap-s", "2.0",
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        med = payload["median_r"]
        assert set(med) == {"15", "20"}
        assert med["15"] == pytest.approx(1.0, abs=1e-9)

    def test_rerun_is_byte_identical(self, tmp_path):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=10)
        shifts = preprocess(tmp_path, raw)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["fit", "--in", shifts, "--out", a, "--starts", 6]) == 0
        assert run(["fit", "--in", shifts, "--out", b, "--starts", 6]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_threads_do_not_change_output(self, tmp_path):
        raw = synth_dir(tmp_path, participants=3, trials=1, shifts=10)
        shifts = preprocess(tmp_path, raw)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert run(["fit", "--in", shifts, "--out", a, "--starts", 6]) == 0
        assert run(["fit", "--in", shifts, "--out", b, "--starts", 6,
                    "--threads", 3]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_symmetry_out(self, tmp_path):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=40)
        sym = tmp_path / "symmetry.json"
        preprocess(tmp_path, raw, extra=["--symmetry-out", sym])
        payload = json.loads(sym.read_text())
        per = payload["participants"]
        assert len(per) == 2
        for rec in per.values():
            assert "mirror_correlation" in rec or "error" in rec


class TestErrorHandling:
    def test_usage_error_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["fit"])  # missing required flags
        assert exc.value.code == 2

    def test_unknown_command_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["frobnicate"])
        assert exc.value.code == 2

    def test_stage_error_reports_json(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = run(["preprocess", "--in-dir", empty, "--out", tmp_path / "x.csv"])
        assert code == 1
        payload = json.loads(capsys.readouterr().err)
        assert payload["stage"] == "preprocess"
        assert payload["error"] == "MissingInputError"
        assert payload["message"]

    def test_fpca_without_soft_hinge_rows(self, tmp_path, capsys):
        fits = tmp_path / "fits.json"
        fits.write_text(json.dumps([
            {"provenance": {}},
            {"participant_id": "p01", "model": "linear", "params":
             {"model": "linear", "alpha": 20.0, "gamma": 0.5},
             "sse": 1.0, "r2": 0.9, "rmse": 0.1, "aic": 3.0,
             "n_points": 10, "converged": True},
        ]))
        code = run(["fpca", "--in", fits, "--out", tmp_path / "s.json"])
        assert code == 1
        payload = json.loads(capsys.readouterr().err)
        assert payload["error"] == "MissingInputError"

    def test_bad_model_name(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args([
                "fit", "--in", "x.csv", "--out", "y.json", "--model", "cubic",
            ])
        assert exc.value.code == 2


class TestConfigResolution:
    def test_config_file_feeds_defaults(self, tmp_path, capsys):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=10)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"starts": 4, "seed": 7}))
        shifts = preprocess(tmp_path, raw)

        with_cfg = tmp_path / "with_cfg.json"
        explicit = tmp_path / "explicit.json"
        assert run(["fit", "--in", shifts, "--out", with_cfg, "--config", cfg]) == 0
        assert run(["fit", "--in", shifts, "--out", explicit,
                    "--starts", 4, "--seed", 7]) == 0
        assert with_cfg.read_bytes() == explicit.read_bytes()

    def test_flag_overrides_config(self, tmp_path):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=10)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 7}))
        shifts = preprocess(tmp_path, raw)

        overridden = tmp_path / "o.json"
        plain = tmp_path / "p.json"
        assert run(["fit", "--in", shifts, "--out", overridden,
                    "--config", cfg, "--seed", 3, "--starts", 4]) == 0
        assert run(["fit", "--in", shifts, "--out", plain,
                    "--seed", 3, "--starts", 4]) == 0
        assert overridden.read_bytes() == plain.read_bytes()

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"n_starts": 4}))
        code = run(["fit", "--in", "x.csv", "--out", "y.json", "--config", cfg])
        assert code == 1
        payload = json.loads(capsys.readouterr().err)
        assert payload["error"] == "ValueError"
        assert "n_starts" in payload["message"]

    def test_defaults_table_is_flat_and_typed(self):
        for key, value in DEFAULTS.items():
            assert isinstance(value, (int, float, str)), key


class TestProvenance:
    def test_provenance_pins_inputs_and_config(self, tmp_path):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=10)
        shifts = preprocess(tmp_path, raw)
        fits = tmp_path / "fits.json"
        assert run(["fit", "--in", shifts, "--out", fits, "--starts", 4]) == 0
        prov = json.loads(fits.read_text())[0]["provenance"]
        assert set(prov) == {"config_hash", "seed", "inputs"}
        assert list(prov["inputs"]) == [shifts.name]
        digest = prov["inputs"][shifts.name]
        assert len(digest) == 64 and int(digest, 16) >= 0

    def test_shift_csv_carries_provenance_header(self, tmp_path):
        raw = synth_dir(tmp_path, participants=2, trials=1, shifts=10)
        shifts = preprocess(tmp_path, raw)
        first = shifts.read_text().splitlines()[0]
        assert first.startswith("# provenance:")
        prov = json.loads(first.split(":", 1)[1])
        assert "config_hash" in prov and "inputs" in prov
        # one gaze + one head file per trial, two participants
        assert len(prov["inputs"]) == 4
