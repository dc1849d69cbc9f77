"""CLI surface: every subcommand, exit codes and --json error payloads."""

import json
from pathlib import Path

import pytest

from ceg_remedy.bundle import save_bundle
from ceg_remedy.cli import main
from ceg_remedy.fixtures import demo_bundle


@pytest.fixture()
def bundles(tmp_path):
    paths = {}
    for model in ("bushing", "warning-lights", "two-level"):
        p = tmp_path / f"{model}.json"
        save_bundle(demo_bundle(model), p)
        paths[model] = str(p)
    return paths


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestValidate:
    def test_ok(self, bundles, capsys):
        code, out, _ = run(capsys, "validate", "-i", bundles["bushing"])
        assert code == 0
        assert "22 positions + 2 sinks" in out

    def test_malformed_bundle_json_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({
            "version": 1,
            "staged_tree": {
                "root": "r",
                "edges": [
                    {"parent": "r", "child": "a", "label": "x", "prob": "0.7"},
                    {"parent": "r", "child": "b", "label": "y", "prob": "0.5"},
                ],
            },
        }))
        code, out, err = run(capsys, "validate", "-i", str(bad), "--json")
        assert code == 1
        payload = json.loads(err)
        assert payload["error"] == "schema-error"
        assert payload["pointer"].startswith("/staged_tree")


class TestBuildAndExport:
    def test_build_ceg_summary(self, bundles, tmp_path, capsys):
        out_path = tmp_path / "with_ceg.json"
        code, out, _ = run(capsys, "build-ceg", "-i", bundles["bushing"],
                           "-o", str(out_path))
        assert code == 0
        assert "22 positions + 2 sinks" in out
        assert out_path.exists()

    def test_export_dot_deterministic(self, bundles, tmp_path, capsys):
        a = tmp_path / "a.dot"
        b = tmp_path / "b.dot"
        run(capsys, "export-dot", "-i", bundles["bushing"], "-o", str(a))
        run(capsys, "export-dot", "-i", bundles["bushing"], "-o", str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_build_gn_respects_constraints(self, tmp_path, capsys):
        from ceg_remedy.bundle import ModelBundle
        from ceg_remedy.fixtures import (
            constrained_search_constraints,
            sample_constrained_search_counts,
            two_level_staged_tree,
            FIG_NET_NON_CAUSAL,
            FIG_NET_REQUIRED,
        )

        bundle = ModelBundle(staged_tree=two_level_staged_tree())
        bundle.counts = sample_constrained_search_counts(800, seed=3)
        bundle.constraints = constrained_search_constraints()
        bundle.non_causal = FIG_NET_NON_CAUSAL
        src = tmp_path / "gn_in.json"
        dst = tmp_path / "gn_out.json"
        save_bundle(bundle, src)
        code, out, _ = run(capsys, "build-gn", "-i", str(src), "-o", str(dst),
                           "--json")
        assert code == 0
        edges = {tuple(e) for e in json.loads(out)["edges"]}
        assert FIG_NET_REQUIRED <= edges
        assert not (FIG_NET_NON_CAUSAL & edges)
        # identical inputs and seed reproduce the same net
        code, out2, _ = run(capsys, "build-gn", "-i", str(src),
                            "-o", str(tmp_path / "gn_out2.json"), "--json")
        assert {tuple(e) for e in json.loads(out2)["edges"]} == edges


class TestQueries:
    def test_do_query(self, bundles, capsys):
        code, out, _ = run(capsys, "do-query", "-i", bundles["two-level"],
                           "--variable", "seal_decay", "--state", "yes",
                           "--json")
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(0.2820512820512821)

    def test_backdoor(self, bundles, capsys):
        code, out, _ = run(capsys, "backdoor", "-i", bundles["warning-lights"],
                           "--remedy", "light repair", "--indicator", "1,1",
                           "--json")
        assert code == 0
        assert 0.0 <= json.loads(out)["value"] <= 1.0

    def test_backdoor_random_mode(self, bundles, capsys):
        code, out, _ = run(capsys, "backdoor", "-i", bundles["warning-lights"],
                           "--remedy", "light repair", "--mode", "random",
                           "--json")
        assert code == 0
        payload = json.loads(out)
        assert 0.0 <= payload["value"] <= 1.0
        assert sum(payload["action_weights"].values()) == pytest.approx(1.0)

    def test_mceg_query_recovers_fact_value(self, bundles, capsys):
        code, out, _ = run(capsys, "mceg-query", "-i",
                           bundles["warning-lights"],
                           "--x", "2 on", "--y", "fault",
                           "--z-label", "1 off", "--z-label", "1 on",
                           "--json")
        assert code == 0
        assert json.loads(out)["value"] == pytest.approx(0.3, abs=1e-10)

    def test_map_path(self, bundles, capsys):
        code, out, _ = run(capsys, "map-path", "-i", bundles["two-level"],
                           "--text",
                           "rust caused the seal deterioration . "
                           "the seal deterioration caused oil leak",
                           "--resolve-max-prob", "--json")
        assert code == 0
        assert json.loads(out)["path"] == "deterioration / not fail"

    def test_map_path_ambiguity_is_surfaced(self, bundles, capsys):
        code, _, err = run(capsys, "map-path", "-i", bundles["two-level"],
                           "--text",
                           "rust caused the seal deterioration . "
                           "the seal deterioration caused oil leak",
                           "--json")
        assert code == 1
        payload = json.loads(err)
        assert payload["error"] == "ambiguous-path"
        assert len(payload["candidates"]) == 2


class TestOracleCheck:
    @pytest.mark.parametrize("argv", [
        ("--query", "control", "--variable", "oil_leak", "--state", "yes"),
    ])
    def test_control_within_tolerance(self, bundles, capsys, argv):
        code, out, _ = run(capsys, "oracle-check", "-i", bundles["two-level"],
                           *argv, "--json")
        assert code == 0
        assert json.loads(out)["max_abs_diff"] < 1e-10

    def test_backdoor_check(self, bundles, capsys):
        code, out, _ = run(capsys, "oracle-check", "-i",
                           bundles["warning-lights"],
                           "--query", "backdoor", "--remedy", "light repair",
                           "--indicator", "1,0", "--json")
        assert code == 0
        assert json.loads(out)["max_abs_diff"] < 1e-10

    def test_mceg_check(self, bundles, capsys):
        code, out, _ = run(capsys, "oracle-check", "-i",
                           bundles["warning-lights"],
                           "--query", "mceg", "--x", "2 on", "--y", "fault",
                           "--z-label", "1 off", "--z-label", "1 on",
                           "--json")
        assert code == 0
        assert json.loads(out)["max_abs_diff"] < 1e-10


class TestExtract:
    def test_with_config_bundle(self, bundles, tmp_path, capsys):
        logs = tmp_path / "logs.txt"
        logs.write_text("the seal deterioration caused oil leak\n")
        out_file = tmp_path / "events.json"
        code, _, _ = run(capsys, "extract", "-i", str(logs),
                         "--config", bundles["bushing"],
                         "-o", str(out_file))
        assert code == 0
        events = json.loads(out_file.read_text())
        assert events[0]["events"][0] == ["seal", "decay"]

    def test_env_config_directory(self, bundles, tmp_path, capsys,
                                  monkeypatch):
        from ceg_remedy.bundle import _dump_extraction
        from ceg_remedy.fixtures import reliability_extraction_config

        cfg_dir = tmp_path / "cfg"
        cfg_dir.mkdir()
        (cfg_dir / "extraction.json").write_text(
            json.dumps(_dump_extraction(reliability_extraction_config())))
        logs = tmp_path / "logs.txt"
        logs.write_text("corrosion caused oil leak\n")
        monkeypatch.setenv("CEG_REMEDY_CONFIG", str(cfg_dir))
        code, out, _ = run(capsys, "extract", "-i", str(logs), "--json")
        assert code == 0

    def test_missing_config_is_an_error(self, tmp_path, capsys, monkeypatch):
        monkeypatch.delenv("CEG_REMEDY_CONFIG", raising=False)
        logs = tmp_path / "logs.txt"
        logs.write_text("something\n")
        code, _, err = run(capsys, "extract", "-i", str(logs), "--json")
        assert code == 1
        assert json.loads(err)["error"] == "schema-error"


class TestMcegRemedialMode:
    def test_remedial_mode_matches_fact_effect(self, bundles, capsys):
        code, out, _ = run(capsys, "mceg-query", "-i",
                           bundles["warning-lights"],
                           "--mode", "remedial", "--remedy", "light repair",
                           "--indicator", "1,1", "--y", "fault", "--json")
        assert code == 0
        recovered = json.loads(out)["value"]
        code, out, _ = run(capsys, "backdoor", "-i",
                           bundles["warning-lights"],
                           "--remedy", "light repair", "--indicator", "1,1",
                           "--y", "fault", "--json")
        assert code == 0
        assert recovered == pytest.approx(json.loads(out)["value"],
                                          abs=1e-10)


class TestMissingSections:
    def test_mceg_query_without_missingness_section(self, bundles, capsys):
        code, _, err = run(capsys, "mceg-query", "-i", bundles["two-level"],
                           "--x", "fail", "--y", "fail", "--json")
        assert code == 1
        assert json.loads(err)["pointer"] == "/missingness"


class TestReport:
    def test_writes_figures_and_tables(self, bundles, tmp_path, capsys):
        outdir = tmp_path / "report"
        code, out, _ = run(capsys, "report", "-i", bundles["two-level"],
                           "-o", str(outdir), "--json")
        assert code == 0
        files = {Path(f).name for f in json.loads(out)["files"]}
        assert {"ceg.png", "global_net.png", "path_mass.png",
                "positions.csv", "paths.csv"} <= files
        for name in files:
            assert (outdir / name).stat().st_size > 0
        import csv

        with (outdir / "paths.csv").open() as fh:
            rows = list(csv.DictReader(fh))
        assert {r["path"] for r in rows} == {
            "deterioration / fail", "deterioration / not fail",
            "contamination / fail", "contamination / not fail"}
