import csv
import re
import subprocess
import sys

import pytest

from mmudn.cli import EXIT_FAILURE, EXIT_USAGE, main

ERROR_LINE = re.compile(r'^error: kind=\w+ message=".*"$')


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text("num_ans = 2\nnum_ues = 3\nantennas_per_an = 16\ntarget_snr_db = 20\n")
    return path


class TestSnapshot:
    def test_both_writes_two_csvs(self, small_cfg, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["snapshot", "--config", str(small_cfg), "--solver", "both", "--out", str(out)]) == 0
        for name in ("baseline_association.csv", "optimal_association.csv"):
            rows = list(csv.reader((out / name).open()))
            assert rows[0] == ["ue_index", "an_index"] and len(rows) == 4
        text = capsys.readouterr().out
        assert re.search(r"^compare: baseline \S+ optimal \S+ status optimal milp_theta \S+ brute_theta \S+$",
                         text, re.M)

    def test_seed_changes_drop(self, small_cfg, tmp_path, capsys):
        main(["snapshot", "--config", str(small_cfg), "--out", str(tmp_path / "a"), "--seed", "1"])
        first = capsys.readouterr().out
        main(["snapshot", "--config", str(small_cfg), "--out", str(tmp_path / "b"), "--seed", "2"])
        assert capsys.readouterr().out != first


class TestRun:
    def test_spec_file(self, tmp_path, capsys):
        spec = tmp_path / "fig4.cfg"
        spec.write_text("campaign = densification\nnum_ues = 3\nm_values = 2, 3\nl_values = 16, 32\n"
                        "snapshots = 2\nsolver = brute\nplots = false\n")
        out = tmp_path / "res"
        assert main(["run", "--config", str(spec), "--out", str(out)]) == 0
        rows = list(csv.reader((out / "aggregate.csv").open()))
        assert len(rows) == 1 + 4
        assert "overall gain" in capsys.readouterr().out

    def test_flags_override_file(self, tmp_path):
        spec = tmp_path / "s.cfg"
        spec.write_text("campaign = single\nnum_ues = 2\nm_values = 2\nl_values = 8\nsnapshots = 50\nplots = no\n")
        assert main(["run", "--config", str(spec), "--snapshots", "3", "--out", str(tmp_path / "o")]) == 0
        rows = list(csv.DictReader((tmp_path / "o" / "snapshots.csv").open()))
        assert len(rows) == 2 * 3


class TestVerifyExportCalibrate:
    def test_verify_line(self, capsys):
        assert main(["verify", "--seed", "7", "--snapshots", "6"]) == 0
        assert re.fullmatch(r"6/6 instances matched, max rel gap \S+\n", capsys.readouterr().out)

    def test_export_lp(self, small_cfg, tmp_path, capsys):
        path = tmp_path / "m.lp"
        assert main(["export-lp", "--config", str(small_cfg), "--out", str(path)]) == 0
        text = path.read_text()
        assert text.startswith("\\") or text.lstrip().lower().startswith("maximize")
        assert "Binaries" in text or "Binary" in text
        assert "binaries" in capsys.readouterr().out

    def test_export_lp_stdout(self, small_cfg, capsys):
        assert main(["export-lp", "--config", str(small_cfg)]) == 0
        assert capsys.readouterr().out.rstrip().lower().endswith("end")

    def test_calibrate(self, small_cfg, capsys):
        assert main(["calibrate", "--config", str(small_cfg)]) == 0
        out = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
        assert abs(float(out["validation_snr_db"]) - 20.0) <= 0.1


class TestErrors:
    @pytest.mark.parametrize("argv", [
        [], ["bogus"], ["run", "--solver", "cplex"], ["snapshot", "--seed", "x"],
    ])
    def test_usage_errors(self, argv, capsys):
        assert main(argv) == EXIT_USAGE
        assert ERROR_LINE.match(capsys.readouterr().err.strip().splitlines()[-1])

    def test_invalid_spec_is_usage_error(self, tmp_path, capsys):
        spec = tmp_path / "bad.cfg"
        spec.write_text("campaign = fig9\n")
        assert main(["run", "--config", str(spec)]) == EXIT_USAGE
        assert ERROR_LINE.match(capsys.readouterr().err.strip())

    def test_missing_file(self, tmp_path, capsys):
        assert main(["snapshot", "--config", str(tmp_path / "nope.cfg")]) == EXIT_FAILURE
        assert ERROR_LINE.match(capsys.readouterr().err.strip())

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "mmudn", "verify", "--snapshots", "2"],
                              capture_output=True, text=True, timeout=120)
        assert proc.returncode == 0 and proc.stdout.startswith("2/2 instances matched")
