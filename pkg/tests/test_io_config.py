import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from circflow import FlowParams, GridSpec, State, build_background, build_grid, make_bump_ic
from circflow.diagnostics import EnergyReport, INTEGRATED, TimeSeries
from circflow.io_config import (
    ConfigError,
    RunConfig,
    atomic_write,
    dump_config,
    parse_config,
    read_snapshot,
    read_timeseries,
    timeseries_header,
    write_snapshot,
    write_timeseries,
)
from circflow.timestepper import StepControl, evolve


def test_minimal_config_defaults():
    cfg = parse_config('{"mode": "steady_check"}')
    assert cfg.mode == "steady_check"
    assert cfg.flow == FlowParams(gamma=1.4, A=1.0, nu1=0.1, nu2=0.0, rho_bar0=1.0, M0=1.0)
    assert cfg.control.cfl_safety == 0.4
    assert cfg.grid.z_boundary == "periodic"


def test_gamma_rejected():
    with pytest.raises(ConfigError, match="gamma > 1"):
        parse_config('{"flow": {"gamma": 0.9}}')


@pytest.mark.parametrize(
    "doc, key",
    [
        ('{"flow": {"nu3": 1.0}}', "nu3"),
        ('{"gird": {}}', "gird"),
        ('{"outputs": {"dir": "x"}}', "dir"),
        ('{"ic": {"amp": 1}}', "amp"),
    ],
)
def test_unknown_keys_named(doc, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(doc)


def test_parse_error_reports_line():
    with pytest.raises(ConfigError, match="line 3"):
        parse_config('{\n "mode": "evolve",\n}')


@pytest.mark.parametrize(
    "doc",
    ['{"mode": "explode"}', '{"grid": {"n_r": 4}}', '{"ic": {"amplitude": -1}}', '{"linearized": 1}', "[1, 2]", '{"ladder": "64"}'],
)
def test_invalid_documents(doc):
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_zero_ic():
    assert parse_config('{"ic": "zero"}').ic.zero


configs = st.builds(
    RunConfig,
    mode=st.sampled_from(["evolve", "steady_check", "sweep", "convergence", "residual"]),
    flow=st.builds(FlowParams, gamma=st.floats(1.05, 3.0), nu1=st.floats(0.01, 1.0)),
    grid=st.builds(GridSpec, n_r=st.integers(16, 256), n_z=st.integers(16, 256), beta=st.floats(0.0, 3.0)),
    control=st.builds(StepControl, t_end=st.floats(0.1, 10.0), diag_every=st.integers(1, 10)),
    linearized=st.booleans(),
)


@given(configs)
def test_config_reserialization_idempotent(cfg):
    text = dump_config(cfg)
    again = parse_config(text)
    assert again == cfg
    assert dump_config(again) == text


def _sample_series():
    grid = build_grid(GridSpec(n_r=32, n_z=32))
    bg = build_background(grid, FlowParams())
    return evolve(make_bump_ic(1e-3, (7.0, 0.0), (1.0, 1.0), grid), bg, StepControl(t_end=1e9, max_steps=5, diag_every=2)).series


def test_timeseries_header_and_roundtrip(tmp_path):
    series = _sample_series()
    path = write_timeseries(series, tmp_path / "ts.csv")
    header = path.read_text().splitlines()[0].split(",")
    assert header[:3] == ["step", "t", "dt"]
    assert set(EnergyReport.names()) <= set(header)
    assert {f"int_{k}" for k in INTEGRATED} <= set(header)
    cols = read_timeseries(path)
    assert len(cols["t"]) == 5 // 2 + 1
    for i, rep in enumerate(series.reports):
        for name in EnergyReport.names():
            assert cols[name][i] == getattr(rep, name)
        for k in INTEGRATED:
            assert cols[f"int_{k}"][i] == series.integrals[k][i]
        assert cols["t"][i] == series.times[i]


def test_zero_series_rows(tmp_path):
    grid = build_grid(GridSpec(n_r=32, n_z=32))
    res = evolve(State.zeros(grid), build_background(grid, FlowParams()), StepControl(t_end=1e9, max_steps=3))
    cols = read_timeseries(write_timeseries(res.series, tmp_path / "z.csv"))
    assert list(cols) == timeseries_header()
    for name in EnergyReport.names():
        assert np.all(cols[name] == 0.0)


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=5))
def test_csv_floats_roundtrip(values):
    import tempfile
    from pathlib import Path

    ts = TimeSeries()
    for k, v in enumerate(values):
        ts.append(k, float(k), 0.1, EnergyReport(e_L2=v))
    with tempfile.TemporaryDirectory() as d:
        cols = read_timeseries(write_timeseries(ts, Path(d) / "x.csv"))
    assert list(cols["e_L2"]) == values


def test_snapshot_roundtrip(tmp_path, rng):
    spec = GridSpec(n_r=20, n_z=24)
    s = State(rng.standard_normal((4,) + spec.shape))
    write_snapshot(s, tmp_path / "s", spec, FlowParams(M0=0.7), t=1.25, step=17)
    snap = read_snapshot(tmp_path / "s.bin", spec)
    assert np.array_equal(snap.state.data, s.data)
    assert snap.grid == spec and snap.flow.M0 == 0.7 and snap.t == 1.25 and snap.step == 17
    raw = np.fromfile(tmp_path / "s.bin", dtype="<f8")
    assert np.array_equal(raw, s.data.ravel())
    meta = json.loads((tmp_path / "s.json").read_text())
    assert meta["grid"]["n_r"] == 20


def test_snapshot_grid_mismatch_names_shapes(tmp_path):
    spec = GridSpec(n_r=20, n_z=24)
    write_snapshot(State.zeros(build_grid(spec)), tmp_path / "s", spec, FlowParams(), 0.0)
    with pytest.raises(ValueError, match=r"\(20, 24\).*\(32, 24\)"):
        read_snapshot(tmp_path / "s", GridSpec(n_r=32, n_z=24))


def test_snapshot_checksum_refused(tmp_path):
    spec = GridSpec(n_r=16, n_z=16)
    write_snapshot(State.zeros(build_grid(spec)), tmp_path / "s", spec, FlowParams(), 0.0)
    data = bytearray((tmp_path / "s.bin").read_bytes())
    data[100] ^= 1
    (tmp_path / "s.bin").write_bytes(bytes(data))
    with pytest.raises(ValueError, match="checksum"):
        read_snapshot(tmp_path / "s")


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "a" / "f.txt", "hello")
    assert (tmp_path / "a" / "f.txt").read_text() == "hello"
    assert [p.name for p in (tmp_path / "a").iterdir()] == ["f.txt"]
