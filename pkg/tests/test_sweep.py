from pathlib import Path

import pytest
from pydantic import ValidationError

from config import settings
from backend.src.nhqc.errors import ParameterError
from backend.src.nhqc.sweep import SweepConfig, run_sweep

SWEEPS_DIR = Path(__file__).resolve().parents[1] / "backend" / "data" / "sweeps"


def _config(**overrides) -> SweepConfig:
    data = {
        "base": {"alpha": "fib:6"},
        "axes": [{"name": "h", "min": 0.0, "max": 3.0, "steps": 3}],
        "observables": {"sector": "single", "epsilon": True, "ipr_extrema": True},
    }
    data.update(overrides)
    return SweepConfig.model_validate(data)


def test_rows_follow_grid_order():
    result = run_sweep(_config())
    assert result.columns == ["h", "observable", "key", "real", "imag", "error"]
    assert [r["h"] for r in result.rows] == [0.0] * 3 + [1.5] * 3 + [3.0] * 3
    assert [r["observable"] for r in result.rows[:3]] == ["epsilon", "ipr_extrema", "ipr_extrema"]
    assert result.rows[0]["real"] < 1e-10
    assert result.rows[-3]["real"] > 1e-3
    assert not result.failed_rows


def test_two_axes_are_row_major():
    config = _config(axes=[
        {"name": "U", "values": [0.0, 1.0]},
        {"name": "h", "values": [0.0, 1.0, 2.0]},
    ], observables={"sector": "single", "epsilon": True})
    points = [(r["U"], r["h"]) for r in run_sweep(config).rows]
    assert points == [(0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (1.0, 0.0), (1.0, 1.0), (1.0, 2.0)]


def test_deterministic_across_runs_and_workers(tmp_path):
    config = _config()
    first = run_sweep(config, workers=1).write(tmp_path / "a.csv")
    second = run_sweep(config, workers=1).write(tmp_path / "b.csv")
    threaded = run_sweep(config, workers=3).write(tmp_path / "c.csv")
    assert first.read_bytes() == second.read_bytes() == threaded.read_bytes()


def test_csv_header_echoes_config(tmp_path):
    out = run_sweep(_config()).write(tmp_path, filename="scan")
    assert out.name == "scan.csv"
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# version=")
    assert lines[1].startswith("# config=")
    assert '"alpha":"8/13"' in lines[1]
    assert lines[2] == "h,observable,key,real,imag,error"


def test_json_output(tmp_path):
    import json

    out = run_sweep(_config()).write(tmp_path / "scan.json", fmt="json")
    payload = json.loads(out.read_text())
    assert payload["metadata"]["config"]["observables"]["epsilon"] is True
    assert len(payload["rows"]) == 9


def test_failures_are_recorded_per_row():
    config = _config(axes=[{"name": "V", "values": [-1.0, 0.15]}])
    result = run_sweep(config)
    failed = result.failed_rows
    assert {r["V"] for r in failed} == {-1.0}
    assert {r["observable"] for r in failed} == {"epsilon", "ipr_extrema"}
    assert any(r["V"] == 0.15 and r["observable"] == "epsilon" for r in result.rows)


def test_winding_and_dynamics_observables():
    config = _config(
        base={"alpha": "fib:5", "U": 10.0, "h": 1.0},
        axes=[],
        observables={
            "winding": {"energies": ["0.5j", [0.0, -0.5]], "sector": "single"},
            "bunching": {"n1": 4, "n2": 5, "t_max": 2.0, "dt": 1.0},
            "tau0": {"n1": 4, "d": [0], "t_max": 2.0},
        },
    )
    rows = run_sweep(config).rows
    winding = [r for r in rows if r["observable"] == "winding"]
    assert [r["key"] for r in winding] == ["0+0.5j", "0-0.5j"]
    assert all(r["real"] == 0.0 for r in winding)
    bunching = [r for r in rows if r["observable"] == "bunching"]
    assert [r["key"] for r in bunching] == ["0", "1", "2"]
    assert bunching[0]["real"] == 0.0
    tau0 = [r for r in rows if r["observable"] == "tau0"]
    assert tau0 == [{"observable": "tau0", "key": 0, "real": 0.0, "imag": None, "error": None}]


def test_config_validation():
    with pytest.raises(ValidationError):
        _config(observables={})
    with pytest.raises(ValidationError):
        _config(axes=[{"name": "alpha", "values": [1]}])
    with pytest.raises(ValidationError):
        _config(axes=[{"name": "h", "min": 0, "max": 1, "steps": 0}])
    with pytest.raises(ValidationError):
        _config(axes=[{"name": "h"}])
    with pytest.raises(ValidationError):
        _config(axes=[{"name": "h", "values": [0]}, {"name": "U", "values": [0]}, {"name": "V", "values": [0]}])
    with pytest.raises(ValidationError):
        _config(axes=[{"name": "h", "values": [0]}, {"name": "h", "values": [1]}])


def test_job_cap(monkeypatch):
    monkeypatch.setattr(settings, "SWEEP_MAX_JOBS", 2)
    with pytest.raises(ParameterError):
        run_sweep(_config())


def test_shipped_configurations_parse():
    files = sorted(SWEEPS_DIR.glob("*.toml"))
    assert files
    for path in files:
        config = SweepConfig.from_toml(path)
        assert config.base.L == 55
        assert config.observables.names()


def _interaction_values(config: SweepConfig) -> set:
    for axis in config.axes:
        if axis.name == "U":
            return set(axis.grid())
    return {config.base.U}


def test_shipped_configurations_cover_every_interaction_strength():
    configs = [SweepConfig.from_toml(p) for p in sorted(SWEEPS_DIR.glob("*.toml"))]
    scanned, spectra = set(), set()
    for config in configs:
        obs = config.observables
        if obs.epsilon and obs.ipr_extrema and "h" in config.axis_names:
            scanned |= _interaction_values(config)
        if obs.spectrum:
            spectra |= _interaction_values(config)
    assert {0.0, 1.0, 3.0, 10.0} <= scanned
    assert {0.0, 1.0, 3.0, 10.0} <= spectra


def test_timestamp_only_when_enabled(monkeypatch):
    assert "created" not in run_sweep(_config(axes=[])).metadata
    monkeypatch.setattr(settings, "SWEEP_STAMP_TIME", True)
    assert "created" in run_sweep(_config(axes=[])).metadata
