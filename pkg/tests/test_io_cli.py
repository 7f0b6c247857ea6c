import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cavitor import basis, cli, io, phantom, reconstruct, recording
from cavitor.grids import CartesianGrid, PolarGrid

SQ = basis.SQUARE


# ---------------------------------------------------------------- file formats

def test_field_round_trip_cartesian_variable_speed(tmp_path):
    c = np.ones((9, 7))
    c[3, 2] = 1.5
    g = CartesianGrid(8, 6, 2.0, math.pi, c)
    data = np.random.default_rng(1).standard_normal(g.shape)
    io.write_field(tmp_path / "f.bin", data, g)
    back, g2 = io.read_field(tmp_path / "f.bin")
    assert back.tobytes() == data.tobytes()
    assert (g2.nx, g2.ny, g2.A, g2.B) == (8, 6, 2.0, math.pi)
    assert np.array_equal(g2.c, g.c)


def test_field_round_trip_polar(tmp_path):
    g = PolarGrid(10, 24)
    data = np.random.default_rng(2).standard_normal(g.shape)
    io.write_field(tmp_path / "p.bin", data, g)
    back, g2 = io.read_field(tmp_path / "p.bin")
    assert back.tobytes() == data.tobytes() and (g2.nr, g2.ntheta) == (10, 24)
    with pytest.raises(io.FormatError):
        io.write_field(tmp_path / "bad.bin", data[:-1], g)


def test_recording_round_trips(tmp_path):
    det = recording.rectangle_detectors(SQ, ("right",), 5)
    rec = recording.BoundaryRecording(SQ, det, 0.125, np.random.default_rng(3).standard_normal((6, 11)),
                                      ("right",), {"source": "test"})
    io.write_recording(tmp_path / "r.bin", rec)
    back = io.read_recording(tmp_path / "r.bin")
    assert back.samples.tobytes() == rec.samples.tobytes()
    assert back.detectors.tobytes() == rec.detectors.tobytes()
    assert back.sides == ("right",) and back.dt == 0.125 and back.meta == {"source": "test"}
    io.recording_to_csv(tmp_path / "r.csv", rec)
    csv_back = io.recording_from_csv(tmp_path / "r.csv", SQ, det, ("right",))
    assert np.array_equal(csv_back.samples, rec.samples) and csv_back.dt == rec.dt


def test_truncated_file_is_rejected(tmp_path):
    g = PolarGrid(8, 16)
    io.write_field(tmp_path / "f.bin", np.zeros(g.shape), g)
    raw = (tmp_path / "f.bin").read_bytes()
    (tmp_path / "t.bin").write_bytes(raw[:-16])
    with pytest.raises(io.FormatError):
        io.read_field(tmp_path / "t.bin")
    with pytest.raises(io.FormatError):
        io.read_recording(tmp_path / "f.bin")


@given(hnp.arrays(np.float64, st.tuples(st.integers(2, 9), st.integers(2, 9)),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_pgm_round_trip_within_quantisation(data):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "x.pgm"
        lo, hi = io.write_pgm(p, data)
        back, lo2, hi2 = io.read_pgm(p)
    assert (lo, hi) == (lo2, hi2) == (data.min(), data.max())
    assert back.shape == data.shape
    assert np.max(np.abs(back - data)) <= (hi - lo) / 65535 * 0.5 + 1e-9 * max(1.0, abs(lo), abs(hi))


def test_csv_values_survive(tmp_path):
    rows = [{"a": 0.1 + 0.2, "b": np.float64(1 / 3), "c": np.int64(7), "d": True}]
    io.write_csv(tmp_path / "x.csv", rows)
    back = io.read_csv(tmp_path / "x.csv")[0]
    assert float(back["a"]) == 0.1 + 0.2 and float(back["b"]) == 1 / 3
    assert back["c"] == "7" and back["d"] == "1"


def test_phantom_ini_round_trip(tmp_path):
    for spec in (phantom.three_bumps(), phantom.three_bumps(basis.Rectangle.from_sides(3.0, 2.0)),
                 phantom.eigenmode(SQ, 1, 2)):
        io.write_phantom(tmp_path / "p.ini", spec)
        back = io.read_phantom(tmp_path / "p.ini")
        assert back.kind == spec.kind and back.bumps == spec.bumps and back.index == spec.index
        assert back.geometry == spec.geometry


def test_run_config(tmp_path):
    cfg = io.RunConfig(geometry="square", resolution="64", T=[1.0, 2.0], detectors="right", phantom="eigen:1,2")
    cfg.to_ini(tmp_path / "run.ini")
    back = io.RunConfig.from_ini(tmp_path / "run.ini")
    assert back == cfg and back.sides == ("right",) and back.grid_resolution() == (64, 64)
    for bad in (dict(T=[2.0, 1.0]), dict(detectors="middle"), dict(geometry="disk", detectors="right"),
                dict(phantom="missing.ini"), dict(data_source="oracle")):
        with pytest.raises(io.FormatError):
            io.RunConfig(**bad)


# ---------------------------------------------------------------- command line

def run(argv, capsys=None):
    code = cli.main([str(a) for a in argv])
    return code


def test_forward_single_mode_trace(tmp_path):
    out = tmp_path / "rec.bin"
    assert run(["forward", "--geometry", "square", "--phantom", "eigen:1,2", "--T", 3, "--dt", 0.01,
                "--n-detectors", 4, "--out", out]) == 0
    rec = io.read_recording(out)
    # first detector is the corner (0, 0): phi_{1,2} = 2/pi there
    j = np.arange(rec.n_samples)
    np.testing.assert_allclose(rec.samples[0], 2 / math.pi * np.cos(math.sqrt(5) * 0.01 * j), atol=1e-14)
    prov = io.read_provenance(str(out) + ".json")
    assert prov["config"]["command"] == "forward" and prov["version"]


def test_reconstruct_sweep_and_replay(tmp_path):
    rec = tmp_path / "rec.bin"
    assert run(["forward", "--geometry", "disk", "--source", "fdtd", "--resolution", "16,32",
                "--T", 2, "--n-detectors", 64, "--out", rec]) == 0
    rep = tmp_path / "rep"
    assert run(["sweep", "--data", rec, "--T", "1,2", "--resolution", "16,32", "--phantom", "default",
                "--out", rep, "--workers", 1]) == 0
    rows = io.read_csv(rep / "metrics.csv")
    assert [float(r["T"]) for r in rows] == [1.0, 2.0]
    assert {"field_T1.pgm", "residual_T2.bin", "phantom.bin", "provenance.json"} <= {p.name for p in rep.iterdir()}
    again = tmp_path / "again"
    assert run(["replay", rep / "provenance.json", "--out", again]) == 0
    rows2 = io.read_csv(again / "metrics.csv")
    for a, b in zip(rows, rows2):
        for k in ("l2w_rel", "h1_rel", "energy_res"):
            assert abs(float(a[k]) - float(b[k])) <= 1e-12
    assert (rep / "field_T2.bin").read_bytes() == (again / "field_T2.bin").read_bytes()


def test_reconstruct_from_config(tmp_path):
    rec = tmp_path / "rec.bin"
    assert run(["forward", "--geometry", "square", "--phantom", "default", "--T", 2, "--n-detectors", 16,
                "--out", rec]) == 0
    cfg = io.RunConfig(geometry="square", resolution="24", T=[2.0], phantom="default", out=str(tmp_path / "c"))
    cfg.to_ini(tmp_path / "run.ini")
    assert run(["reconstruct", "--config", tmp_path / "run.ini", "--data", rec]) == 0
    assert (tmp_path / "c" / "metrics.csv").exists()


def test_cli_errors(tmp_path, capsys):
    assert run(["reconstruct", "--data", tmp_path / "nope.bin", "--T", 1, "--out", tmp_path / "x"]) != 0
    assert "nope.bin" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        run(["forward", "--geometry", "disk"])
    assert run(["modes", "--geometry", "hexagon", "--cap", 3, "--out", tmp_path / "m.csv"]) != 0


def test_modes_and_coincidence_report(tmp_path):
    assert run(["modes", "--geometry", "square", "--bc", "neumann", "--cap", 20, "--out", tmp_path / "m.csv",
                "--coincidences", tmp_path / "c.csv"]) == 0
    modes = io.read_csv(tmp_path / "m.csv")
    assert len(modes) == len(basis.enumerate_modes(SQ, "neumann", 20))
    rows = io.read_csv(tmp_path / "c.csv")
    assert list(rows[0]) == ["nIdx", "lIdx", "kIdx", "mIdx", "eigenvalue", "coupling"]
    hit = [r for r in rows if (r["nIdx"], r["lIdx"], r["kIdx"], r["mIdx"]) == ("1", "2", "2", "1")]
    assert float(hit[0]["coupling"]) == pytest.approx(-32 / (9 * math.pi**2), abs=1e-12)


def test_bessel_verify_and_predict(tmp_path):
    assert run(["bessel-verify", "--m-max", 5, "--k-max", 10, "--out", tmp_path / "b.csv"]) == 0
    rows = io.read_csv(tmp_path / "b.csv")
    assert list(rows[0]) == ["m", "k", "l", "quantity", "bound", "value", "pass"]
    assert all(r["pass"] == "1" for r in rows)
    assert run(["predict", "--geometry", "square", "--phantom", "eigen:1,2", "--eps", 0.05, "--caps", "6,12",
                "--out", tmp_path / "p.csv"]) == 0
    pred = {(r["k"], r["m"]): float(r["persistent"]) for r in io.read_csv(tmp_path / "p.csv")}
    assert pred[("2", "1")] == pytest.approx(32 / (9 * math.pi**2), abs=1e-12)


def test_render_phantom(tmp_path):
    assert run(["render-phantom", "--geometry", "disk", "--resolution", "32,64", "--out", tmp_path / "f.bin",
                "--pgm", tmp_path / "f.pgm"]) == 0
    data, g = io.read_field(tmp_path / "f.bin")
    assert g.shape == (33, 64) and data.max() == pytest.approx(1.0, abs=0.05)
    img, lo, hi = io.read_pgm(tmp_path / "f.pgm")
    assert img.shape == (256, 256) and lo == 0.0


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("CAVITOR_THREADS", "3")
    assert reconstruct.worker_count() == 3
    monkeypatch.setenv("CAVITOR_THREADS", "0")
    assert reconstruct.worker_count() == 1
