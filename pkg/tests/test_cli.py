import numpy as np
import pytest

from hismhd import diagnostics
from hismhd.checkpoint import read_checkpoint
from hismhd.cli import main

BASE_CFG = """
n = 16
box_length = 6.283185307179586
nu = 0.8
mu = 1.2
sigma = 0.5
kappa = 0.1
alpha = 1.0
m0 = 1.5
delta = 0.25
alpha1 = 1.0
alpha2 = 0.7
seed = 3
scheme_order = 3
tolerance = 1e-6
t_end = 0.4
diagnostics_interval = 0.1
checkpoint_interval = 0.2
"""


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE_CFG)
    return str(path)


def _series_rows(path):
    _, header, rows = diagnostics.read_csv(path)
    return header, rows


class TestGenData:
    def test_writes_checkpoint_and_provenance(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        assert main(["gen-data", "--config", cfg_path, "--out", out]) == 0
        grid, state, params, header = read_checkpoint(f"{out}/initial.chk")
        assert grid.n == 16 and state.t == 0.0 and params.nu == 0.8
        comments, hdr, rows = diagnostics.read_csv(f"{out}/provenance.csv")
        assert hdr == ["key", "value"]
        assert any("delta_eff" in str(r[0]) for r in rows)
        assert any("periodic box" in c for c in comments)

    def test_zero_data_checkpoint(self, tmp_path):
        cfg = tmp_path / "zero.cfg"
        cfg.write_text(BASE_CFG + "alpha1 = 0\nalpha2 = 0\nsmall_budget = 0\n")
        out = str(tmp_path / "out")
        assert main(["gen-data", "--config", str(cfg), "--out", out]) == 0
        _, state, _, _ = read_checkpoint(f"{out}/initial.chk")
        assert np.max(np.abs(state.u)) == 0.0
        assert np.max(np.abs(state.b)) == 0.0

    def test_seed_reproducibility_byte_identical(self, cfg_path, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        main(["gen-data", "--config", cfg_path, "--out", out1])
        main(["gen-data", "--config", cfg_path, "--out", out2])
        a = open(f"{out1}/initial.chk", "rb").read()
        b = open(f"{out2}/initial.chk", "rb").read()
        assert a == b

    def test_unsatisfiable_annulus_exit_3(self, tmp_path):
        cfg = tmp_path / "small.cfg"
        cfg.write_text("n = 8\nbox_length = 2.0\nm0 = 0.0\n".replace("m0 = 0.0", "m0 = 1.0")
                       + "delta = 0.25\n")
        out = str(tmp_path / "out")
        assert main(["gen-data", "--config", str(cfg), "--out", out]) == 3

    def test_usage_error_on_bad_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("kappa = -1\n")
        assert main(["gen-data", "--config", str(cfg), "--out", str(tmp_path)]) == 2


class TestRun:
    def test_missing_checkpoint_is_usage_error(self, cfg_path, tmp_path):
        assert main(["run", "--config", cfg_path, "--out", str(tmp_path / "nope")]) == 2

    def test_zero_horizon_single_row(self, tmp_path):
        cfg = tmp_path / "zero.cfg"
        cfg.write_text(BASE_CFG + "t_end = 0\n")
        out = str(tmp_path / "out")
        assert main(["gen-data", "--config", str(cfg), "--out", out]) == 0
        assert main(["run", "--config", str(cfg), "--out", out]) == 0
        header, rows = _series_rows(f"{out}/series.csv")
        assert header == diagnostics.SERIES_COLUMNS
        assert len(rows) == 1
        assert rows[0][0] == 0.0

    def test_run_decays_energy_and_writes_verdict(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        main(["gen-data", "--config", cfg_path, "--out", out])
        assert main(["run", "--config", cfg_path, "--out", out]) == 0
        header, rows = _series_rows(f"{out}/series.csv")
        e = [r[header.index("energy_total")] for r in rows]
        assert all(b < a + 1e-12 for a, b in zip(e, e[1:]))
        _, _, vrows = diagnostics.read_csv(f"{out}/verdict.csv")
        keys = {r[0] for r in vrows}
        assert {"sup_perturbation_h3", "stated_threshold", "passed"} <= keys

    def test_plain_mhd_run_decays_monotonically(self, tmp_path):
        cfg = tmp_path / "mhd.cfg"
        cfg.write_text(BASE_CFG + "sigma = 0\nkappa = 0\n")
        out = str(tmp_path / "out")
        main(["gen-data", "--config", str(cfg), "--out", out])
        assert main(["run", "--config", str(cfg), "--out", out]) == 0
        header, rows = _series_rows(f"{out}/series.csv")
        e = [r[header.index("energy_total")] for r in rows]
        assert all(b < a + 1e-12 for a, b in zip(e, e[1:]))

    def test_restart_reproduces_series_rows(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        main(["gen-data", "--config", cfg_path, "--out", out])
        main(["run", "--config", cfg_path, "--out", out])
        full_header, full_rows = _series_rows(f"{out}/series.csv")

        out2 = str(tmp_path / "resumed")
        assert main(["run", "--config", cfg_path, "--out", out2,
                     "--restart", f"{out}/checkpoint_0000.chk"]) == 0
        _, resumed_rows = _series_rows(f"{out2}/series.csv")
        t_resume = resumed_rows[0][0]
        tail_full = [r for r in full_rows if r[0] > t_resume]
        tail_resumed = [r for r in resumed_rows if r[0] > t_resume]
        assert tail_full == tail_resumed

    def test_thread_count_agrees_with_serial(self, cfg_path, tmp_path):
        out1, out2 = str(tmp_path / "s1"), str(tmp_path / "s2")
        main(["gen-data", "--config", cfg_path, "--out", out1])
        main(["run", "--config", cfg_path, "--out", out1, "--threads", "1"])
        main(["gen-data", "--config", cfg_path, "--out", out2])
        main(["run", "--config", cfg_path, "--out", out2, "--threads", "2"])
        _, rows1 = _series_rows(f"{out1}/series.csv")
        _, rows2 = _series_rows(f"{out2}/series.csv")
        for r1, r2 in zip(rows1, rows2):
            assert r1 == pytest.approx(r2, rel=1e-12, abs=1e-250)


class TestVerify:
    def test_identities_pass(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        assert main(["verify", "--config", cfg_path, "--out", out,
                     "--which", "identities"]) == 0
        assert (tmp_path / "out" / "verify_identities.csv").exists()
        assert (tmp_path / "out" / "verify_summary.txt").exists()

    def test_multipliers_report(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        assert main(["verify", "--config", cfg_path, "--out", out,
                     "--which", "multipliers"]) == 0
        _, header, rows = diagnostics.read_csv(f"{out}/verify_multipliers.csv")
        assert "violates1" in header
        assert len(rows) == 6  # three alphas, two deltas

    def test_residual_pass(self, cfg_path, tmp_path):
        out = str(tmp_path / "out")
        assert main(["verify", "--config", cfg_path, "--out", out,
                     "--which", "residual"]) == 0


class TestDecayFit:
    def test_reports_exact_rates(self, cfg_path, tmp_path, capsys):
        out = str(tmp_path / "out")
        assert main(["decay-fit", "--config", cfg_path, "--out", out]) == 0
        assert (tmp_path / "out" / "decay_f.csv").exists()
        text = capsys.readouterr().out
        assert "fitted rate" in text
