import json
from fractions import Fraction
from pathlib import Path

import pytest

from treedyn.cli import main
from treedyn.serialization import dump_json, map_to_json, subtree_to_json

from helpers import (
    constant_map,
    halving_map,
    identity_map,
    interval_tree,
    tent_map,
)

F = Fraction
SPECS = Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture
def tent_spec(tmp_path):
    path = tmp_path / "tent.json"
    dump_json(path, map_to_json(tent_map()))
    return path


class TestAnalyze:
    def test_tent(self, tent_spec, tmp_path):
        out = tmp_path / "out"
        code = main(["analyze", "--map", str(tent_spec), "--out", str(out),
                     "--max-period", "2"])
        assert code == 0
        report = json.loads((out / "analysis.json").read_text())
        ts = sorted(p["t"] for p in report["fixed_points"])
        assert ts == ["0", "2/3"]
        periods = sorted(o["period"] for o in report["periodic_orbits"])
        assert periods == [1, 1, 2]
        assert report["no_periodic_cutpoints"]["holds"] is False

    def test_halving_has_afp(self, tmp_path):
        spec = tmp_path / "halving.json"
        dump_json(spec, map_to_json(halving_map()))
        out = tmp_path / "out"
        assert main(["analyze", "--map", str(spec), "--out", str(out)]) == 0
        report = json.loads((out / "analysis.json").read_text())
        assert report["afp"]["point"] == {"edge": "a:b", "t": "0"}
        assert report["immediate_basin"]["stabilized"] is True

    def test_identity_warns_fixed_segment(self, tmp_path):
        spec = tmp_path / "id.json"
        dump_json(spec, map_to_json(identity_map(interval_tree())))
        out = tmp_path / "out"
        assert main(["analyze", "--map", str(spec), "--out", str(out)]) == 0
        report = json.loads((out / "analysis.json").read_text())
        assert report["warnings"]
        assert "fixed_segments" in report

    def test_malformed_input(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["analyze", "--map", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["analyze", "--map", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 2


class TestClassify:
    def test_constant_map_both(self, tmp_path):
        t = interval_tree()
        spec = tmp_path / "const.json"
        dump_json(spec, map_to_json(constant_map(t, t.point(("a", "b"), F(1, 3)))))
        cont = tmp_path / "cont.json"
        dump_json(cont, subtree_to_json(t.full_subtree()))
        out = tmp_path / "out"
        code = main(["classify", "--map", str(spec), "--continuum", str(cont),
                     "--out", str(out)])
        assert code == 0
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["tag"] == "both"
        assert verdict["period"] == 1
        assert (out / "orbit.csv").exists()

    def test_tent_full_interval_periodic(self, tent_spec, tmp_path):
        cont = tmp_path / "cont.json"
        t = interval_tree()
        dump_json(cont, subtree_to_json(t.full_subtree()))
        out = tmp_path / "out"
        code = main(["classify", "--map", str(tent_spec), "--continuum", str(cont),
                     "--out", str(out)])
        assert code == 0
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["tag"] == "periodic"
        assert verdict["exact"] is True

    def test_tiny_budget_undecided_exit_3(self, tmp_path):
        spec = tmp_path / "halving.json"
        dump_json(spec, map_to_json(halving_map()))
        cont = tmp_path / "cont.json"
        t = interval_tree()
        dump_json(cont, subtree_to_json(t.subtree({("a", "b"): (F(1, 4), F(1, 2))})))
        out = tmp_path / "out"
        code = main(["classify", "--map", str(spec), "--continuum", str(cont),
                     "--out", str(out), "--budget", "30", "--max-period", "4"])
        assert code == 3
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["tag"] == "undecided"


class TestEntropyCmd:
    def test_tent_tables(self, tent_spec, tmp_path):
        out = tmp_path / "out"
        code = main(["entropy", "--map", str(tent_spec), "--out", str(out),
                     "--n-max", "8", "--eps-list", "1/16"])
        assert code == 0
        assert (out / "entropy.csv").exists()
        assert (out / "rates_eps_1_16.csv").exists()
        report = json.loads((out / "entropy.json").read_text())
        assert report["monotonicity_violations"] == []
        assert 0.5 < report["bracket"]["upper"] < 0.9

    def test_determinism(self, tent_spec, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        argv = ["entropy", "--map", str(tent_spec), "--n-max", "6",
                "--eps-list", "1/16", "--seed", "5"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        for name in ("entropy.csv", "entropy.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_workers_flag_same_output(self, tent_spec, tmp_path):
        out1, out2 = tmp_path / "w1", tmp_path / "w2"
        base = ["entropy", "--map", str(tent_spec), "--n-max", "6",
                "--eps-list", "1/16,1/32"]
        assert main(base + ["--out", str(out1), "--workers", "1"]) == 0
        assert main(base + ["--out", str(out2), "--workers", "2"]) == 0
        assert (out1 / "entropy.csv").read_bytes() == (out2 / "entropy.csv").read_bytes()


class TestEnvelopeCmd:
    def test_tent_envelope(self, tent_spec, tmp_path):
        out = tmp_path / "out"
        code = main(["envelope", "--map", str(tent_spec), "--out", str(out),
                     "--n-max", "4", "--eps-list", "1/16", "--samples", "6"])
        assert code == 0
        report = json.loads((out / "envelope.json").read_text())
        check = report["family_checks"][0]
        assert check["grid_cells"] == 7
        assert check["pairs_separated"] == check["pairs_checked"]


class TestVerifyInvariants:
    def test_tent_passes(self, tent_spec, tmp_path):
        out = tmp_path / "out"
        code = main(["verify-invariants", "--map", str(tent_spec),
                     "--out", str(out), "--samples", "60"])
        assert code == 0
        report = json.loads((out / "invariants.json").read_text())
        assert report["all_passed"] is True
        for check in report["checks"].values():
            assert check["failures"] == 0


class TestShippedSpecs:
    def test_shipped_specs_load(self, tmp_path):
        for name in ("tent", "halving", "zigzag3", "triod_swap_contract",
                     "identity_interval"):
            out = tmp_path / name
            code = main(["analyze", "--map", str(SPECS / f"{name}.json"),
                         "--out", str(out), "--max-period", "2"])
            assert code == 0
