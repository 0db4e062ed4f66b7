import subprocess
import sys

import pytest

from mcshare import validation
from mcshare.cli import main


def run_cli(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def get_value(stdout, key):
    for line in stdout.splitlines():
        if line.startswith(key + "="):
            return float(line.split("=", 1)[1])
    raise AssertionError(f"{key}= not found in {stdout!r}")


def test_p1_isolation_limit(capsys):
    rc, out, _ = run_cli(capsys, "p1", "--theta-db", "0", "--epsilon", "0")
    assert rc == 0
    assert get_value(out, "p1") == pytest.approx(0.5600991535115574, abs=1e-6)


def test_p1_defaults(capsys):
    rc, out, _ = run_cli(capsys, "p1", "--theta-db", "0")
    assert rc == 0
    assert get_value(out, "p1") == pytest.approx(0.18575625731994527, abs=1e-8)


def test_p2_k0(capsys):
    rc, out, _ = run_cli(capsys, "p2", "--theta-db", "0", "--k", "0")
    assert rc == 0
    assert get_value(out, "p2") == pytest.approx(0.9561343718351609, abs=1e-9)
    assert get_value(out, "x_factor") == pytest.approx(0.044856819494918945, rel=1e-10)


def test_rate_command(capsys):
    rc, out, _ = run_cli(capsys, "rate")
    assert rc == 0
    assert get_value(out, "rate") == pytest.approx(0.5212681999167734, abs=1e-6)
    assert get_value(out, "rate_est_error") < 1e-6


def test_mc_command(capsys):
    rc, out, _ = run_cli(capsys, "mc", "--link", "bh", "--runs", "100", "--seed", "5")
    assert rc == 0
    assert 0.0 <= get_value(out, "p_hat") <= 1.0
    # binomial half-width near p=0.5 with n=100 is at most ~0.098
    assert get_value(out, "ci95") <= 0.098000001
    assert get_value(out, "n") == 100


def test_set_override_and_config(capsys, tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("epsilon = 0.5\n# comment\n", encoding="utf-8")
    rc, out, _ = run_cli(capsys, "p1", "--theta-db", "0", "--config", str(cfg), "--set", "lambda_c=1e-6")
    assert rc == 0
    assert 0.0 < get_value(out, "p1") < 1.0


def test_full_profile_flag_and_runs_precedence(capsys):
    # --full-profile widens the window; an explicit --runs still wins
    rc, out, _ = run_cli(
        capsys, "mc", "--link", "bh", "--full-profile", "--runs", "40", "--seed", "8", "--theta-db", "0"
    )
    assert rc == 0
    assert get_value(out, "n") == 40


def test_unknown_set_key_fails(capsys):
    rc, _, err = run_cli(capsys, "p1", "--theta-db", "0", "--set", "lambd=1e-6")
    assert rc == 2
    assert "unknown parameter" in err


def test_epsilon_zero_rejected_via_set(capsys):
    # --set goes through strict validation; the --epsilon 0 flag is the
    # dedicated analytic-limit path
    rc, _, err = run_cli(capsys, "p1", "--theta-db", "0", "--set", "epsilon=0")
    assert rc == 2
    assert "epsilon" in err


def test_figure_invalid_id():
    with pytest.raises(SystemExit):
        main(["figure", "fig99"])


def test_figure_writes_outputs(capsys, tmp_path):
    rc, out, _ = run_cli(
        capsys, "figure", "fig3", "--out", str(tmp_path), "--runs", "6", "--seed", "3", "--no-plot"
    )
    assert rc == 0
    assert (tmp_path / "fig3.csv").exists()


def test_figure_unwritable_out(capsys, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    rc, _, err = run_cli(capsys, "figure", "fig3", "--out", str(blocker / "sub"), "--runs", "5")
    assert rc == 2
    assert "error" in err


def test_threads_do_not_change_figure_bytes(tmp_path):
    """End-to-end determinism through the real console entry point."""
    base = [sys.executable, "-m", "mcshare.cli", "figure", "fig3", "--runs", "30", "--seed", "11", "--no-plot"]
    subprocess.run(base + ["--out", str(tmp_path / "a"), "--threads", "1"], check=True, capture_output=True)
    subprocess.run(base + ["--out", str(tmp_path / "b"), "--threads", "3"], check=True, capture_output=True)
    assert (tmp_path / "a" / "fig3.csv").read_bytes() == (tmp_path / "b" / "fig3.csv").read_bytes()


def test_validate_subset(capsys, tmp_path):
    rc, out, _ = run_cli(capsys, "validate", "--only", "C10", "--out", str(tmp_path))
    assert rc == 0
    assert "C10.bessel-i0-at-1" in out
    assert "FAIL" not in out
    report = (tmp_path / "validation_report.txt").read_text()
    assert "C10.rho-closed-vs-quadrature" in report


def test_validate_unknown_check(capsys):
    rc, _, err = run_cli(capsys, "validate", "--only", "C99")
    assert rc == 2


def test_mutated_rho_breaks_monotonicity(monkeypatch):
    """Sanity: an injected bug in rho must flip the trend checks to FAIL."""
    from mcshare import analytic

    true_rho = analytic.rho
    monkeypatch.setattr(analytic, "rho", lambda theta, alpha: true_rho(1.0 / theta, alpha))
    results = validation.check_monotonicity(validation.SystemParams())
    failed = {r.check_id for r in results if r.status == validation.FAIL}
    assert "C6.p1-nonincreasing-theta" in failed
