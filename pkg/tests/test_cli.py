import json
from pathlib import Path

import numpy as np
import pytest

from archemo import Grid, integrate
from archemo import cli


def _read(path):
    return Path(path).read_bytes()


def test_run_writes_outputs_and_roundtrips(tmp_path):
    out = tmp_path / "runA"
    code = cli.main(
        [
            "run", "--scenario", "ex4_1", "--mu", "0",
            "--nx", "32", "--ny", "32", "--t-end", "0.02",
            "--snapshots", "3", "--out", str(out),
        ]
    )
    assert code == 0
    series = (out / "series.csv").read_text().splitlines()
    assert series[0] == "t,max_u,min_u,mass,linf_diff,L1,L2"
    assert len(series) > 2
    rows = [line.split(",") for line in series[1:]]
    ts = [float(r[0]) for r in rows]
    assert ts[0] == 0.0 and all(a < b for a, b in zip(ts, ts[1:]))

    report = json.loads((out / "report.json").read_text())
    assert report["event"]["kind"] in ("TimeLimit", "Converged")
    assert report["exit_code"] == 0
    assert report["config"].startswith("mode=run")
    assert (out / "report.txt").exists()

    # snapshots round-trip: reintegrating reproduces the series mass
    snaps = sorted(out.glob("u_*.csv"))
    assert len(snaps) >= 2
    mass_by_t = {float(r[0]): float(r[3]) for r in rows}
    for snap in snaps:
        meta, values = cli.read_snapshot(snap)
        g = Grid(int(meta["nx"]), int(meta["ny"]))
        t = float(meta["t"])
        assert t in mass_by_t
        assert integrate(g, values) == pytest.approx(mass_by_t[t], rel=1e-12)


def test_run_is_byte_deterministic(tmp_path):
    args = [
        "run", "--scenario", "ex4_2", "--mu", "1",
        "--nx", "24", "--ny", "24", "--t-end", "0.005",
        "--snapshots", "2",
    ]
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert cli.main(args + ["--out", str(out1)]) == 0
    assert cli.main(args + ["--out", str(out2)]) == 0
    assert _read(out1 / "series.csv") == _read(out2 / "series.csv")
    snaps1 = sorted(p.name for p in out1.glob("*_*.csv"))
    snaps2 = sorted(p.name for p in out2.glob("*_*.csv"))
    assert snaps1 == snaps2
    for name in snaps1:
        assert _read(out1 / name) == _read(out2 / name)


def test_unknown_scenario_exits_2(capsys):
    assert cli.main(["run", "--scenario", "does_not_exist"]) == 2
    assert "unknown scenario" in capsys.readouterr().err


def test_bad_config_values_exit_2(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("safety=not_a_number\n")
    assert cli.main(["run", "--scenario", "ex4_1", "--config", str(cfg)]) == 2
    cfg.write_text("nonsense line without equals\n")
    assert cli.main(["run", "--scenario", "ex4_1", "--config", str(cfg)]) == 2


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "scenario=ex4_1\nmu=1\nnx=24\nny=24\nt_end=0.01\nsnapshots=0\n"
    )
    out = tmp_path / "out"
    code = cli.main(
        ["run", "--config", str(cfg), "--t-end", "0.002", "--out", str(out)]
    )
    assert code == 0
    echo = json.loads((out / "report.json").read_text())["config"]
    pairs = dict(line.split("=", 1) for line in echo.strip().splitlines())
    assert pairs["t_end"] == "0.002"  # flag beats file
    assert pairs["nx"] == "24"        # file beats scenario default
    assert pairs["mu"] == "1.0"
    assert pairs["scenario"] == "ex4_1_mu1"


def test_exit_code_blowup_via_threshold_override(tmp_path):
    cfg = tmp_path / "b.cfg"
    cfg.write_text("blowup_threshold=500\n")
    code = cli.main(
        [
            "run", "--scenario", "ex4_1", "--mu", "0", "--config", str(cfg),
            "--nx", "24", "--ny", "24", "--t-end", "0.01",
        ]
    )
    assert code == 10


def test_exit_code_imaginary(tmp_path):
    code = cli.main(
        ["run", "--scenario", "ex4_9", "--mu", "0", "--nx", "101", "--ny", "101"]
    )
    assert code == 11


def test_clip_negative_flag_accepted(tmp_path):
    code = cli.main(
        [
            "run", "--scenario", "ex4_9", "--mu", "0",
            "--nx", "48", "--ny", "48", "--clip-negative", "--t-end", "1e-6",
        ]
    )
    assert code in (0, 10)  # anything but the imaginary exit


def test_sweep_rows_and_determinism(tmp_path):
    out = tmp_path / "sweep"
    args = [
        "sweep", "--scenario", "ex4_1",
        "--nx", "16", "--ny", "16", "--t-end", "1e-3",
        "--sweep", "mu=0,1", "--out", str(out),
    ]
    assert cli.main(args) == 0
    table = (out / "phase.csv").read_text().splitlines()
    assert table[0] == "k,l,m,mu,amplitude,event,t_event,final_max_u,theorem1,detail"
    assert len(table) == 3
    mus = [float(line.split(",")[3]) for line in table[1:]]
    assert mus == sorted(mus) == [0.0, 1.0]
    for line in table[1:]:
        assert line.split(",")[5] in ("TimeLimit", "Converged")

    out2 = tmp_path / "sweep2"
    assert cli.main(args[:-1] + [str(out2)]) == 0
    assert _read(out / "phase.csv") == _read(out2 / "phase.csv")


def test_sweep_empty_range_yields_header_only(tmp_path):
    out = tmp_path / "sweepE"
    code = cli.main(
        [
            "sweep", "--scenario", "ex4_1", "--nx", "16", "--ny", "16",
            "--sweep", "mu=", "--out", str(out),
        ]
    )
    assert code == 0
    table = (out / "phase.csv").read_text().splitlines()
    assert len(table) == 1


def test_sweep_bad_axis_exits_2(capsys):
    assert cli.main(["sweep", "--scenario", "ex4_1", "--sweep", "zeta=1,2"]) == 2
    assert "sweep axis" in capsys.readouterr().err


def test_sweep_row_errors_are_recorded_not_fatal(tmp_path):
    out = tmp_path / "sweepErr"
    code = cli.main(
        [
            "sweep", "--scenario", "ex4_1", "--nx", "16", "--ny", "16",
            "--t-end", "1e-4", "--sweep", "k=0.5,1.0", "--out", str(out),
        ]
    )
    assert code == 0
    lines = (out / "phase.csv").read_text().splitlines()
    assert len(lines) == 3
    by_k = {float(line.split(",")[0]): line for line in lines[1:]}
    assert "Error" in by_k[0.5]  # k < 1 violates the parameter contract
    assert "Error" not in by_k[1.0]


def test_verify_quick_passes(capsys):
    assert cli.main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "ok laplacian_oracle" in out
    assert "ok chemo_divergence_oracle" in out
    assert "ok discrete_conservation" in out


def test_verify_detects_broken_stencil(monkeypatch, capsys):
    true_lap = cli.laplacian

    def broken(grid, f):
        return true_lap(grid, f) * 1.0001

    monkeypatch.setattr(cli, "laplacian", broken)
    assert cli.main(["verify", "--quick"]) == 1
    captured = capsys.readouterr()
    assert "FAIL laplacian_oracle" in captured.out
    assert "laplacian_oracle" in captured.err


def test_custom_scenario_from_inline_keys(tmp_path):
    cfg = tmp_path / "custom.cfg"
    cfg.write_text(
        "scenario=custom\nu0_amp=20\nu0_width=10\nv0_amp=5\nv0_width=5\n"
        "w0_amp=5\nw0_width=5\nk=1\nl=1\nm=1\nmu=0\nnx=20\nny=20\nt_end=1e-3\n"
    )
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    echo = json.loads((out / "report.json").read_text())["config"]
    assert "scenario=custom" in echo
    assert "u0_amp=20.0" in echo
