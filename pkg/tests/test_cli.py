import pathlib

import pytest

from porsim.cli import main


GOLDEN_DIR = pathlib.Path("goldens")
SCENARIO_DIR = pathlib.Path("scenarios")


class TestRunCommand:
    def test_happy_trace_ends_with_the_response(self, tmp_path, capsys):
        out = tmp_path / "trace.tsv"
        assert main(["run", "--scenario", str(SCENARIO_DIR / "happy.por"),
                     "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        deliveries = [line for line in lines if "\trecv " in line]
        assert deliveries[-1].startswith("800\tAlex\trecv msg=Alex#0 kind=response")
        assert lines[-1].startswith("800")

    def test_run_writes_timeline_too(self, tmp_path):
        timeline = tmp_path / "t.txt"
        assert main(["run", "--scenario", str(SCENARIO_DIR / "happy.por"),
                     "--out", str(tmp_path / "x.tsv"), "--timeline", str(timeline)]) == 0
        assert timeline.read_text() == (GOLDEN_DIR / "happy.timeline.txt").read_text()

    def test_malformed_scenario_fails_with_diagnostic(self, tmp_path, capsys):
        bad = tmp_path / "bad.por"
        bad.write_text("[nodes]\nA stake=oops\n")
        assert main(["run", "--scenario", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_zero_horizon_produces_empty_trace(self, tmp_path):
        out = tmp_path / "trace.tsv"
        assert main(["run", "--scenario", str(SCENARIO_DIR / "happy.por"),
                     "--out", str(out), "--horizon-ms", "0"]) == 0
        assert out.read_text() == ""

    def test_missing_file_fails(self):
        assert main(["run", "--scenario", "nope.por"]) == 2

    def test_insolvent_originator_is_a_clean_error(self, tmp_path, capsys):
        bad = tmp_path / "broke.por"
        bad.write_text(
            "[nodes]\nA stake=1 cash=0\nB stake=1 cash=0\n"
            "[edges]\nA B latency=10 base=5 sync=100 phase=0\n"
            "[script]\n0 originate A B payload=0 path=A>B\n"
            "[run]\nhorizon_ms=1000\nname=broke\n"
        )
        assert main(["run", "--scenario", str(bad)]) == 2
        assert "cannot fund" in capsys.readouterr().err


class TestCheckCommand:
    @pytest.mark.parametrize("name", [
        "happy", "break_now", "wait_and_pay", "stall_default",
        "wait_longer", "requery_until_isolation",
    ])
    def test_all_shipped_goldens_match(self, name):
        assert main(["check",
                     "--scenario", str(SCENARIO_DIR / f"{name}.por"),
                     "--golden", str(GOLDEN_DIR / f"{name}.timeline.txt")]) == 0

    def test_perturbed_sync_phase_mismatches_at_the_1000_row(self, tmp_path, capsys):
        text = (SCENARIO_DIR / "wait_and_pay.por").read_text()
        perturbed = tmp_path / "perturbed.por"
        perturbed.write_text(
            text.replace("Alex Alice latency=100 base=1 byte=0 rate=1 sync=500 phase=500",
                         "Alex Alice latency=100 base=1 byte=0 rate=1 sync=500 phase=600")
        )
        assert main(["check", "--scenario", str(perturbed),
                     "--golden", str(GOLDEN_DIR / "wait_and_pay.timeline.txt")]) == 1
        err = capsys.readouterr().err
        assert "mismatch" in err
        # first divergence is the 500 no-payment row moving to 600
        assert "500" in err

    def test_missing_golden_is_an_error(self):
        assert main(["check", "--scenario", str(SCENARIO_DIR / "happy.por"),
                     "--golden", "missing.txt"]) == 2


class TestPropertiesCommand:
    def test_small_sweep_passes(self, capsys):
        assert main(["properties", "--seed", "1", "--iterations", "25"]) == 0
        out = capsys.readouterr().out
        assert "PASS outcome-trichotomy" in out
        assert "PASS center-chain-resistance" in out

    def test_zero_iterations_is_a_usage_error(self, capsys):
        assert main(["properties", "--iterations", "0"]) == 2
