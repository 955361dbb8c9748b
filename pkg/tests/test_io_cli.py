import xml.etree.ElementTree as ET

import numpy as np
import pytest

from respq import fileio
from respq.cli import main
from respq.errors import ConfigError, ParseError


def run_cli(*args):
    return main([str(a) for a in args])


@pytest.fixture()
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def small_pipeline(root, seed=7, preset="uniform-noise", duration=30):
    run_cli("synth", "--preset", preset, "--seed", seed, "--duration", duration, "--out", root / "data")
    run_cli(
        "estimate",
        "--signals", root / "data" / "signals.csv",
        "--streams", root / "data" / "streams.csv",
        "--out", root / "est",
    )
    run_cli(
        "quality",
        "--signals", root / "data" / "signals.csv",
        "--streams", root / "data" / "streams.csv",
        "--out", root / "qual",
    )


class TestCsvRoundTrips:
    def test_signals_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        series = {
            ("rec0", "a"): rng.standard_normal(50),
            ("rec0", "b"): rng.uniform(-1e12, 1e12, 30),
        }
        path = tmp_path / "signals.csv"
        fileio.write_signals(path, series)
        back = fileio.read_signals(path)
        for key in series:
            assert np.array_equal(series[key], back[key])

    def test_streams_round_trip(self, tmp_path):
        streams = [("rec0", "gt", 20.0, "GT"), ("rec0", "m1", 30.5, "NLM")]
        path = tmp_path / "streams.csv"
        fileio.write_streams(path, streams)
        assert fileio.read_streams(path) == streams

    def test_rr_round_trip(self, tmp_path):
        rows = [("r", "m", "welch", 0, 15.123456789012345), ("r", "m", "music", 1, float("nan"))]
        path = tmp_path / "rr.csv"
        fileio.write_rr(path, rows)
        back = fileio.read_rr(path)
        assert back[0] == rows[0]
        assert np.isnan(back[1][4])

    def test_quality_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        rows = [
            ("r", "m", w, True, rng.standard_normal(10), rng.standard_normal(10), rng.uniform(size=10))
            for w in range(3)
        ]
        path = tmp_path / "quality.csv"
        fileio.write_quality(path, rows)
        back = fileio.read_quality(path)
        for orig, rt in zip(rows, back):
            assert orig[:4] == rt[:4]
            for a, b in zip(orig[4:], rt[4:]):
                assert np.array_equal(a, b)

    def test_stats_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        lo = rng.standard_normal(10)
        hi = lo + rng.uniform(size=10)
        path = tmp_path / "stats.csv"
        fileio.write_stats(path, lo, hi)
        lo2, hi2 = fileio.read_stats(path)
        assert np.array_equal(lo, lo2) and np.array_equal(hi, hi2)

    def test_seventeen_digit_rendering(self):
        v = 0.1 + 0.2
        assert float(fileio.fmt(v)) == v
        assert float(fileio.fmt(1e-308)) == 1e-308


class TestParseErrors:
    def test_bad_header_names_line_1(self, tmp_path):
        p = tmp_path / "signals.csv"
        p.write_text("wrong,header\n1,2\n")
        with pytest.raises(ParseError) as err:
            fileio.read_signals(p)
        assert err.value.line == 1

    def test_contiguity_break_names_line(self, tmp_path):
        p = tmp_path / "signals.csv"
        p.write_text(
            "recording_id,method_id,sample_index,value\nr,m,0,1.0\nr,m,2,1.0\n"
        )
        with pytest.raises(ParseError) as err:
            fileio.read_signals(p)
        assert err.value.line == 3

    def test_bad_group_tag(self, tmp_path):
        p = tmp_path / "streams.csv"
        p.write_text("recording_id,method_id,sample_rate_hz,group_tag\nr,m,20,BOGUS\n")
        with pytest.raises(ParseError) as err:
            fileio.read_streams(p)
        assert err.value.line == 2

    def test_nonfinite_value_rejected(self, tmp_path):
        p = tmp_path / "signals.csv"
        p.write_text("recording_id,method_id,sample_index,value\nr,m,0,inf\n")
        with pytest.raises(ParseError):
            fileio.read_signals(p)


class TestRunConfig:
    def test_defaults(self):
        cfg = fileio.load_config(None)
        assert (
            cfg.window_s,
            cfg.step_s,
            cfg.band_lo_hz,
            cfg.band_hi_hz,
            cfg.estimator,
            cfg.music_p,
            cfg.music_nfft,
            cfg.welch_subsegment_s,
            cfg.welch_overlap,
            cfg.nfft,
            cfg.seed,
            cfg.normalization_scope,
            cfg.filter_fraction,
        ) == (10.0, 1.0, 0.1, 0.5, "welch", 2, 4096, 5.0, 0.5, 4096, 42, "dataset", 0.0)

    def test_round_trip(self, tmp_path):
        cfg = fileio.load_config(None)
        path = tmp_path / "run.cfg"
        fileio.save_config(path, cfg)
        assert fileio.load_config(path) == cfg

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("bogus_key = 3\n")
        with pytest.raises(ConfigError) as err:
            fileio.load_config(p)
        assert err.value.key == "bogus_key"

    def test_bad_value(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("music_p = fast\n")
        with pytest.raises(ConfigError):
            fileio.load_config(p)

    def test_override(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text("estimator = music\nseed = 9\n")
        cfg = fileio.load_config(p)
        assert cfg.estimator == "music" and cfg.seed == 9


class TestCliWorkflow:
    def test_estimate_row_count_grid(self, workdir):
        small_pipeline(workdir)
        rr = fileio.read_rr(workdir / "est" / "rr.csv")
        methods = {m for _, m, _, _, _ in rr}
        estimators = {e for _, _, e, _, _ in rr}
        windows = {w for _, _, _, w, _ in rr}
        assert len(rr) == len(methods) * len(estimators) * len(windows)
        assert len(estimators) == 4
        assert len(windows) == 21  # 30 s recording, 10 s window, 1 s step

    def test_quality_values_match_library(self, workdir):
        small_pipeline(workdir)
        rows = fileio.read_quality(workdir / "qual" / "quality.csv")
        assert all(np.all((norm >= 0) & (norm <= 1)) for *_, norm in rows)

    def test_subset_search_output_format(self, workdir, capsys):
        small_pipeline(workdir)
        code = run_cli(
            "subset-search",
            "--quality", workdir / "qual" / "quality.csv",
            "--errors", workdir / "est" / "errors.csv",
            "--streams", workdir / "data" / "streams.csv",
            "--out", workdir / "subset",
        )
        assert code == 0
        shown = capsys.readouterr().out
        assert "MAE" in shown
        with open(workdir / "subset" / "subset.csv", encoding="utf-8") as fh:
            header = fh.readline().strip()
            row = fh.readline().strip()
        assert header == "scenario,mask,mae_bpm"
        display = {"ZCR", "Hjorth-M", "Hjorth-C", "SNR", "IPR", "BPR", "KURT", "SKEW", "PI", "TMCC"}
        mask_field = row.split(",", 1)[1].rsplit(",", 1)[0].strip('"')
        names = [part.strip() for part in mask_field.split(",")]
        assert len(names) >= 2 and all(name in display for name in names)

    def test_full_train_fuse_filter_report(self, workdir):
        small_pipeline(workdir, preset="disjoint-failure", duration=60)
        for args in (
            ("train", "--quality", workdir / "qual" / "quality.csv", "--errors",
             workdir / "est" / "errors.csv", "--streams", workdir / "data" / "streams.csv",
             "--out", workdir / "models"),
            ("fuse", "--rr", workdir / "est" / "rr.csv", "--gt", workdir / "est" / "gt_rr.csv",
             "--quality", workdir / "qual" / "quality.csv", "--streams",
             workdir / "data" / "streams.csv", "--models", workdir / "models",
             "--mask", "Hjorth-M, BPR, PI", "--out", workdir / "fused"),
            ("filter", "--rr", workdir / "est" / "rr.csv", "--gt", workdir / "est" / "gt_rr.csv",
             "--quality", workdir / "qual" / "quality.csv", "--streams",
             workdir / "data" / "streams.csv", "--models", workdir / "models",
             "--out", workdir / "filt"),
            ("sweep", "--rr", workdir / "est" / "rr.csv", "--gt", workdir / "est" / "gt_rr.csv",
             "--streams", workdir / "data" / "streams.csv", "--out", workdir / "swp"),
            ("report", "--sweep", workdir / "swp" / "sweep.csv", "--filter",
             workdir / "filt" / "filter.csv", "--out", workdir / "rep"),
        ):
            assert run_cli(*args) == 0
        with open(workdir / "fused" / "results.csv", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        assert lines[0] == "strategy,scenario,mae_bpm,pcc,coverage"
        strategies = [line.split(",")[0] for line in lines[1:]]
        assert "oracle_gt_mae" in strategies and "smm_transfer" in strategies
        # oracle row is minimal among full-coverage strategies
        rows = [line.split(",") for line in lines[1:]]
        full_cov = [r for r in rows if float(r[4]) == 1.0]
        oracle_mae = next(float(r[2]) for r in full_cov if r[0] == "oracle_gt_mae")
        assert all(float(r[2]) >= oracle_mae - 1e-12 for r in full_cov)
        # filter sweep: exactly the 6-point grid per (method, kind)
        with open(workdir / "filt" / "filter.csv", encoding="utf-8") as fh:
            flines = fh.read().splitlines()[1:]
        per_pair = {}
        for line in flines:
            m, kind, q = line.split(",")[:3]
            per_pair.setdefault((m, kind), []).append(float(q))
        for qs in per_pair.values():
            assert qs == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
        for svg in ("heatmap.svg", "filter.svg"):
            ET.parse(workdir / "rep" / svg)  # well-formed XML

    def test_scenario_filtering(self, workdir):
        small_pipeline(workdir, preset="disjoint-failure", duration=60)
        code = run_cli(
            "fuse", "--rr", workdir / "est" / "rr.csv", "--gt", workdir / "est" / "gt_rr.csv",
            "--quality", workdir / "qual" / "quality.csv", "--streams",
            workdir / "data" / "streams.csv", "--scenario", "NLM", "--out", workdir / "fnlm",
        )
        assert code == 0
        with open(workdir / "fnlm" / "results.csv", encoding="utf-8") as fh:
            body = fh.read()
        assert ",NLM," in body

    def test_error_exit_is_one_line(self, workdir, capsys):
        code = run_cli("estimate", "--signals", "missing.csv", "--streams", "also.csv",
                       "--out", workdir / "x")
        assert code == 1
        err = capsys.readouterr().err
        assert err.startswith("error: MissingInput:")
        assert err.count("\n") == 1

    def test_malformed_header_reports_line_1(self, workdir, capsys):
        bad = workdir / "bad.csv"
        bad.write_text("nope\n")
        streams = workdir / "streams.csv"
        streams.write_text("recording_id,method_id,sample_rate_hz,group_tag\n")
        code = run_cli("estimate", "--signals", bad, "--streams", streams, "--out", workdir / "o")
        assert code == 1
        assert "line 1" in capsys.readouterr().err

    def test_rerun_byte_identical(self, workdir):
        for d in ("a", "b"):
            base = workdir / d
            small_pipeline(base, seed=11)
        for rel in ("data/signals.csv", "data/streams.csv", "est/rr.csv", "est/gt_rr.csv",
                    "est/errors.csv", "qual/quality.csv", "qual/stats.csv"):
            f1 = (workdir / "a" / rel).read_bytes()
            f2 = (workdir / "b" / rel).read_bytes()
            assert f1 == f2, rel
