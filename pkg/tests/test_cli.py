import csv
import json

import pytest

from vegspot.cli.main import EXIT_NUMERICAL, EXIT_USAGE, _classify_cell, main
from vegspot.model.model_core import Classification, ModelParams, criterion_boundary, spot_gap_criterion


def _read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


class TestUsage:
    """Exit codes for malformed invocations."""

    def test_unknown_flag(self, tmp_path, capsys):
        assert main(["regions", "--bogus", "--out", str(tmp_path)]) == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_missing_subcommand(self):
        assert main([]) == EXIT_USAGE

    def test_nonpositive_parameter(self, tmp_path):
        assert main(["predict-radius", "--a", "-1", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_ring_needs_radii(self, tmp_path):
        assert main(["solve", "--a", "2.625", "--kind", "ring", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_bad_radii(self, tmp_path, capsys):
        code = main(["solve", "--a", "2.625", "--kind", "spot", "--radii", "5", "8", "--out", str(tmp_path)])
        assert code == EXIT_USAGE
        assert "usage" in capsys.readouterr().err

    def test_radii_out_of_order(self, tmp_path):
        code = main(["solve", "--a", "2.625", "--kind", "ring", "--radii", "6", "3", "--out", str(tmp_path)])
        assert code == EXIT_USAGE

    @pytest.mark.parametrize("subcommand", ["spectrum", "simulate"])
    def test_missing_profile_file(self, tmp_path, capsys, subcommand):
        missing = tmp_path / "nowhere.csv"
        code = main([subcommand, "--profile", str(missing), "--out", str(tmp_path / "out")])
        assert code == EXIT_USAGE
        assert "nowhere.csv" in capsys.readouterr().err

    def test_missing_profile_for_continuation(self, tmp_path):
        code = main(
            ["continue", "--profile", str(tmp_path / "nowhere.csv"), "--a-target", "2.6", "--out", str(tmp_path)]
        )
        assert code == EXIT_USAGE


class TestRegions:
    """Window and classification tables."""

    def test_single_b_row(self, tmp_path):
        assert main(["regions", "--b", "1", "--m", "0.5", "--samples", "41", "--out", str(tmp_path)]) == 0
        windows = _read_csv(tmp_path / "windows.csv")
        assert len(windows) == 1
        assert float(windows[0]["a_over_m_low"]) == pytest.approx(5.0)
        assert float(windows[0]["a_over_m_high"]) == pytest.approx(6.5)
        assert windows[0]["nonempty"] == "true"

        cells = _read_csv(tmp_path / "regions.csv")
        assert len(cells) == 41
        for cell in cells:
            inside = 5.0 < float(cell["a_over_m"]) < 6.5
            assert (cell["admissible"] == "true") == inside
        labels = {cell["classification"] for cell in cells if cell["admissible"] == "true"}
        assert labels == {"spot", "gap"}

        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["subcommand"] == "regions"
        assert manifest["wall_time"] >= 0

    def test_cells_agree_with_criterion_near_boundary(self):
        b, m = 1.0, 0.5
        boundary = criterion_boundary(b, m)
        signs = {Classification.SPOT: 1, Classification.GAP: -1, Classification.BOUNDARY: 0}
        for offset in (-1e-4, -1e-8, -1e-11, 0.0, 1e-11, 1e-8, 1e-4):
            a = boundary + offset
            admissible, sign = _classify_cell((a / m, b, m))
            expected = spot_gap_criterion(ModelParams(a, b, m)).classification
            assert admissible
            assert sign == signs[expected], f"a = boundary {offset:+.0e}: {sign} vs {expected}"

    def test_cells_outside_window(self):
        assert _classify_cell((4.0, 1.0, 0.5)) == (False, 0)


class TestPredictRadius:
    """Singular radius prediction from the command line."""

    def test_writes_prediction(self, tmp_path):
        assert main(["predict-radius", "--a", "2.625", "--out", str(tmp_path)]) == 0
        prediction = json.loads((tmp_path / "prediction.json").read_text())
        assert prediction["kind"] == "spot"
        assert prediction["r_interface"] == pytest.approx(5.66, abs=0.5)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["params"]["a"] == 2.625

    def test_numerical_failure_exit_code(self, tmp_path, capsys):
        code = main(["predict-radius", "--a", "2.625", "--kind", "gap", "--out", str(tmp_path)])
        assert code == EXIT_NUMERICAL
        assert "NoIntersection" in capsys.readouterr().err


class TestFront:
    """Planar front summary."""

    def test_gap_side_speed(self, tmp_path):
        assert main(["front", "--a", "2.665", "--out", str(tmp_path)]) == 0
        front = json.loads((tmp_path / "front.json").read_text())
        assert front["speed"] == pytest.approx(-0.013, abs=0.005)
        assert front["orientation"] == "dv"
        assert front["sideband"] > 0
        assert _read_csv(tmp_path / "front.csv")[0].keys() == {"xi", "u", "v"}


class TestPipeline:
    """solve followed by spectrum on its profile."""

    @pytest.mark.slow
    def test_solve_then_spectrum(self, tmp_path):
        solved = tmp_path / "solve"
        assert main(["solve", "--a", "2.625", "--out", str(solved)]) == 0
        profile = solved / "profile.csv"
        assert profile.with_suffix(".json").exists()

        spectrum = tmp_path / "spectrum"
        assert main(["spectrum", "--profile", str(profile), "--k", "3", "--out", str(spectrum)]) == 0
        rows = _read_csv(spectrum / "spectrum.csv")
        assert len(rows) == 25
        assert sorted(int(row["l"]) for row in rows) == list(range(-12, 13))
        manifest = json.loads((spectrum / "manifest.json").read_text())
        assert str(profile) in manifest["inputs"]
