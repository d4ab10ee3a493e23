"""Run configuration (JSON), time-series CSV and binary snapshots.

Config document (every block optional; unknown keys are rejected)::

    {
      "mode": "evolve",                 # evolve | steady_check | sweep | convergence | residual
      "flow":    {"A": 1, "gamma": 1.4, "nu1": 0.1, "nu2": 0, "rho_bar0": 1, "M0": 1},
      "grid":    {"n_r": 128, "n_z": 128, "r_max": 21, "z_min": -10, "z_max": 10,
                  "beta": 1.0, "z_boundary": "periodic"},
      "control": {"cfl_safety": 0.4, "t_end": 5, "max_steps": 100000, "diag_every": 1},
      "ic":      {"amplitude": 1e-3, "center": [7, 0], "widths": [1, 1],
                  "components": ["phi", "v_r", "v_theta", "v_z"]}  or  "zero",
      "outputs": {"directory": "out", "snapshot_every": 0,
                  "contamination_threshold": 1e-3, "margin": 4},
      "linearized": false,
      "ladder": [64, 128, 256],
      "sweep":   {"epsilons": [1e-2, 1e-3, 1e-4]},
      "convergence": {"ladder": [32, 64, 128], "t_end": 0.5}
    }
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .background import FlowParams
from .diagnostics import INTEGRATED, EnergyReport, TimeSeries
from .dynamics import COMPONENTS, State
from .operators import GridSpec
from .timestepper import StepControl

MODES = ("evolve", "steady_check", "sweep", "convergence", "residual")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ICConfig:
    amplitude: float = 1e-3
    center: tuple[float, float] = (7.0, 0.0)
    widths: tuple[float, float] = (1.0, 1.0)
    components: tuple[str, ...] = COMPONENTS
    zero: bool = False

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError(f"amplitude >= 0 required, got {self.amplitude}")
        if len(self.center) != 2 or len(self.widths) != 2:
            raise ValueError("center and widths must be [r, z] pairs")
        bad = set(self.components) - set(COMPONENTS)
        if bad:
            raise ValueError(f"unknown components {sorted(bad)}")


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    snapshot_every: int = 0
    contamination_threshold: float = 1e-3
    margin: int = 4

    def __post_init__(self):
        if self.snapshot_every < 0:
            raise ValueError("snapshot_every >= 0 required")
        if not self.contamination_threshold > 0:
            raise ValueError("contamination_threshold > 0 required")
        if self.margin < 1:
            raise ValueError("margin >= 1 required")


@dataclass(frozen=True)
class SweepConfig:
    epsilons: tuple[float, ...] = (1e-2, 1e-3, 1e-4)


@dataclass(frozen=True)
class ConvergenceConfig:
    ladder: tuple[int, ...] = (32, 64, 128)
    t_end: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    mode: str = "evolve"
    flow: FlowParams = field(default_factory=FlowParams)
    grid: GridSpec = field(default_factory=GridSpec)
    control: StepControl = field(default_factory=StepControl)
    ic: ICConfig = field(default_factory=ICConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    linearized: bool = False
    ladder: tuple[int, ...] = (64, 128, 256)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        ic = d["ic"]
        d["ic"] = "zero" if ic.pop("zero") else ic
        return _listify(d)


def _listify(obj):
    if isinstance(obj, dict):
        return {k: _listify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_listify(v) for v in obj]
    return obj


_TUPLE_FIELDS = {"center", "widths", "components", "epsilons", "ladder"}


def _build(cls, block, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object, got {type(block).__name__}")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(block) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(repr(k) for k in unknown)}")
    kwargs = {}
    for k, v in block.items():
        if k in _TUPLE_FIELDS:
            if not isinstance(v, list):
                raise ConfigError(f"{where}.{k}: expected a list")
            v = tuple(v)
        kwargs[k] = v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON run configuration."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    top = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(doc) - top)
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(repr(k) for k in unknown)}")

    kw = {}
    sub = {
        "flow": FlowParams,
        "grid": GridSpec,
        "control": StepControl,
        "outputs": OutputConfig,
        "sweep": SweepConfig,
        "convergence": ConvergenceConfig,
    }
    for key, cls in sub.items():
        if key in doc:
            kw[key] = _build(cls, doc[key], key)
    if "ic" in doc:
        ic = doc["ic"]
        kw["ic"] = ICConfig(zero=True) if ic == "zero" else _build(ICConfig, ic, "ic")
        if isinstance(ic, dict) and "zero" in ic:
            raise ConfigError("ic: use \"ic\": \"zero\" rather than a 'zero' key")
    if "mode" in doc:
        kw["mode"] = doc["mode"]
    if "linearized" in doc:
        if not isinstance(doc["linearized"], bool):
            raise ConfigError("linearized: expected true/false")
        kw["linearized"] = doc["linearized"]
    if "ladder" in doc:
        if not isinstance(doc["ladder"], list) or not all(isinstance(n, int) for n in doc["ladder"]):
            raise ConfigError("ladder: expected a list of integers")
        kw["ladder"] = tuple(doc["ladder"])
    try:
        return RunConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


# -- atomic writes ---------------------------------------------------------


def atomic_write(path, data: bytes | str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "w" if isinstance(data, str) else "wb"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({"newline": ""} if mode == "w" else {})) as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- time series -----------------------------------------------------------


def timeseries_header() -> list[str]:
    return ["step", "t", "dt", *EnergyReport.names(), *(f"int_{k}" for k in INTEGRATED), "N", "monitor"]


def timeseries_csv(series: TimeSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(timeseries_header())
    for i, rep in enumerate(series.reports):
        ints = [series.integrals[k][i] for k in INTEGRATED]
        n = rep.n_inst + series.integrals["n_diss"][i]
        row = [series.steps[i], repr(float(series.times[i])), repr(float(series.dts[i]))]
        row += [repr(float(v)) for v in rep.values()]
        row += [repr(float(v)) for v in ints]
        row += [repr(float(n)), repr(float(series.monitor[i]))]
        w.writerow(row)
    return buf.getvalue()


def write_timeseries(series: TimeSeries, path) -> Path:
    path = Path(path)
    atomic_write(path, timeseries_csv(series))
    return path


def read_timeseries(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {}
    for k, name in enumerate(header):
        vals = [row[k] for row in body]
        cols[name] = np.array([int(v) for v in vals]) if name == "step" else np.array([float(v) for v in vals])
    return cols


# -- snapshots -------------------------------------------------------------


def _snapshot_paths(path) -> tuple[Path, Path]:
    path = Path(path)
    base = path.with_suffix("") if path.suffix in (".bin", ".json") else path
    return base.with_suffix(".bin"), base.with_suffix(".json")


def write_snapshot(state: State, path, grid_spec: GridSpec, params: FlowParams, t: float, step: int = 0) -> Path:
    """Raw little-endian float64 fields (phi, v_r, v_theta, v_z; row-major) plus a JSON sidecar."""
    bin_path, json_path = _snapshot_paths(path)
    if state.data.shape != (4,) + grid_spec.shape:
        raise ValueError(f"state shape {state.data.shape} does not match grid {grid_spec.shape}")
    payload = np.ascontiguousarray(state.data, dtype="<f8").tobytes(order="C")
    meta = {
        "grid": dataclasses.asdict(grid_spec),
        "flow": dataclasses.asdict(params),
        "t": t,
        "step": step,
        "fields": list(COMPONENTS),
        "dtype": "<f8",
        "sha256": hashlib.sha256(payload).hexdigest(),
    }
    atomic_write(bin_path, payload)
    atomic_write(json_path, json.dumps(meta, indent=2))
    return bin_path


@dataclass
class Snapshot:
    state: State
    grid: GridSpec
    flow: FlowParams
    t: float
    step: int


def read_snapshot(path, expect_grid: GridSpec | None = None) -> Snapshot:
    bin_path, json_path = _snapshot_paths(path)
    meta = json.loads(json_path.read_text())
    payload = bin_path.read_bytes()
    if hashlib.sha256(payload).hexdigest() != meta["sha256"]:
        raise ValueError(f"checksum mismatch for {bin_path}; refusing to load")
    spec = GridSpec(**meta["grid"])
    if expect_grid is not None and spec.shape != expect_grid.shape:
        raise ValueError(f"snapshot grid {spec.shape} does not match expected grid {expect_grid.shape}")
    if expect_grid is not None and spec != expect_grid:
        raise ValueError(f"snapshot grid {spec} does not match expected grid {expect_grid}")
    n = 4 * spec.n_r * spec.n_z
    if len(payload) != 8 * n:
        raise ValueError(f"snapshot holds {len(payload) // 8} values, grid {spec.shape} needs {n}")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape((4,) + spec.shape)
    return Snapshot(State(data), spec, FlowParams(**meta["flow"]), float(meta["t"]), int(meta.get("step", 0)))
