import json
from math import pi

import numpy as np
import pytest

from ring_noon.config import (
    ConfigError,
    RunConfig,
    build_config,
    load_config,
    parse_grid,
    parse_number,
    parse_override,
)
from ring_noon.io import emit_table, to_jsonable, write_sidecar


def test_parse_number():
    assert parse_number("pi", "x") == pi
    assert parse_number("2*pi - 0.5", "x") == pytest.approx(2 * pi - 0.5)
    assert parse_number(3, "x") == 3.0
    for bad in ("__import__('os')", "e", True, [1]):
        with pytest.raises(ConfigError):
            parse_number(bad, "x")


def test_parse_grid():
    assert parse_grid({"start": 0, "stop": "2*pi", "num": 3}, "g") == (0.0, pi, 2 * pi)
    assert parse_grid([0.1, "pi"], "g") == (0.1, pi)
    with pytest.raises(ConfigError):
        parse_grid([1, 1], "g")
    with pytest.raises(ConfigError):
        parse_grid([], "g")
    with pytest.raises(ConfigError):
        parse_grid({"start": 0, "stop": 1}, "g")
    with pytest.raises(ConfigError):
        parse_grid({"start": 0, "stop": 1, "num": 0}, "g")


def test_defaults():
    cfg = RunConfig()
    p = cfg.model_params()
    assert (p.N, p.U, p.delta_J, p.omega_phase) == (3, 0.05, 0.01, pi)
    assert cfg.drive.amplitude == 0.05
    assert build_config(cfg.to_dict()) == cfg


def test_load_and_override(tmp_path):
    f = tmp_path / "run.toml"
    f.write_text(
        '[model]\nN = 4\nomega_phase = "pi - 0.2"\n\n[grids]\nomega = {start = 0, stop = "2*pi", num = 5}\n'
    )
    cfg = load_config(f, ["model.U=0.3", "ramp.shape=linear"])
    assert cfg.model.N == 4 and cfg.model.U == 0.3
    assert cfg.model.omega_phase == pytest.approx(pi - 0.2)
    assert len(cfg.grids.omega) == 5
    assert cfg.ramp.shape == "linear"
    assert cfg.with_overrides(model={"N": 6}).model.N == 6


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[model]\nN = 3\nfoo = 1\n", "line 3"),
        ("[modle]\nN = 3\n", "unknown section"),
        ("[model]\nN = 2.5\n", "integer"),
        ("[model]\ndelta_J = 1.5\n", "delta_J"),
        ("[solver]\ndt_max = 0\n", "positive"),
        ("[solver]\nmethod = 'euler'\n", "not one of"),
        ("[sampling]\nshots = 10\n", "together"),
        ("[ramp]\nreadout = 1\n", "true or false"),
        ("[model\n", ""),
    ],
)
def test_config_errors(tmp_path, text, fragment):
    f = tmp_path / "bad.toml"
    f.write_text(text)
    with pytest.raises(ConfigError) as exc:
        load_config(f)
    assert fragment in str(exc.value)


def test_override_syntax():
    assert parse_override("model.N=5") == ("model", "N", 5)
    assert parse_override("ramp.shape=linear") == ("ramp", "shape", "linear")
    with pytest.raises(ConfigError):
        parse_override("model.N")
    with pytest.raises(ConfigError):
        parse_override("N=3")
    with pytest.raises(ConfigError):
        load_config(None, ["model.N=0"])
    with pytest.raises(ConfigError):
        load_config("/nonexistent/run.toml")


def test_emit_table_format(tmp_path):
    path = emit_table([(1, 0.1 + 0.2, True, "a"), {"n": 2, "x": 1e-20, "flag": False, "s": "b"}],
                      ["n", "x", "flag", "s"], tmp_path / "t.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.decode().splitlines() == ["n,x,flag,s", "1,0.3,1,a", "2,1e-20,0,b"]


def test_emit_table_refuses_bad_rows(tmp_path):
    target = tmp_path / "t.csv"
    with pytest.raises(ValueError):
        emit_table([(1.0, float("nan"))], ["a", "b"], target)
    assert not target.exists()
    with pytest.raises(ValueError):
        emit_table([(1.0,)], ["a", "b"], target)
    with pytest.raises(ValueError):
        emit_table([{"a": 1}], ["a", "b"], target)
    with pytest.raises(ValueError):
        emit_table([], ["a", "a"], target)
    empty = emit_table([], ["a", "b"], target)
    assert empty.read_text() == "a,b\n"


def test_sidecar(tmp_path):
    path = write_sidecar(tmp_path / "s.json",
                         {"b": np.arange(3), "a": np.float64(0.5), "c": float("inf"), "d": np.bool_(True)})
    doc = json.loads(path.read_text())
    assert doc == {"schema_version": 1, "a": 0.5, "b": [0, 1, 2], "c": None, "d": True}
    assert list(doc) == sorted(doc)
    assert to_jsonable((np.int64(3),)) == [3]
