import csv
import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from genusflow import io
from genusflow.cli import main
from genusflow.config import ExperimentConfig
from genusflow.evolver import FlowFrame
from genusflow.exceptions import ConfigurationError
from genusflow.grid import OffsetOfProfile, Sphere, Torus, build_grid, init_signed_distance
from genusflow.harness import RunConfig


def test_default_config():
    cfg = ExperimentConfig.load()
    assert cfg.run == RunConfig()
    assert cfg.section("bisect") == {"tol": 1 / 64}
    assert cfg.section("validate")["descent_n"] == 16
    with pytest.raises(ConfigurationError):
        cfg.surface()


@pytest.mark.parametrize("surface,cls", [({"kind": "sphere", "radius": 1.0}, Sphere),
                                         ({"kind": "torus", "R": 2.0, "rho": 0.5}, Torus)])
def test_surface_kinds(surface, cls):
    assert isinstance(ExperimentConfig({"surface": surface}).surface(), cls)


def test_offset_of_analytic_torus():
    cfg = ExperimentConfig({"surface": {"kind": "offset", "delta": 0.05,
                                        "base": {"kind": "torus", "R": 2.0, "rho": 0.5}}})
    spec = cfg.surface()
    assert isinstance(spec, OffsetOfProfile) and spec.delta == 0.05


@pytest.mark.parametrize("raw", [{"bogus": {}}, {"run": {"hh": 0.1}}, {"entropy": {"x": 1}},
                                 {"run": {"h": 2.0}}, []])
def test_bad_configs_rejected(raw):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(raw)


def test_bad_surface_rejected():
    for s in ({"radius": 1.0}, {"kind": "cone"}, {"kind": "sphere", "r": 1.0},
              {"kind": "torus", "R": 1.0, "rho": 2.0}):
        with pytest.raises(ConfigurationError):
            ExperimentConfig({"surface": s}).surface()


def test_overrides_and_round_trip(tmp_path):
    cfg = ExperimentConfig({"run": {"t_max": 0.5}}).with_overrides(seed=7, h=1 / 32, n=24,
                                                                    workers=2)
    assert cfg.run.seed == 7 and cfg.run.h == 1 / 32 and cfg.run.workers == 2
    assert cfg.run.t_max == 0.5 and cfg.section("validate")["n"] == 24
    path = tmp_path / "cfg.json"
    path.write_text(cfg.dumps())
    assert ExperimentConfig.load(path) == cfg
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(tmp_path / "missing.json")


def test_family_from_torus_base():
    fam = ExperimentConfig({"family": {"base": {"kind": "torus", "R": 1.0, "rho": 0.6},
                                       "delta0": -0.3, "delta1": 0.25}}).family()
    assert isinstance(fam.base, Torus) and fam.delta0 == -0.3


def _frames():
    g = build_grid(3.0, -1.5, 1.5, 1 / 16)
    return [FlowFrame(0.0, 0, init_signed_distance(Torus(2.0, 0.5), g)),
            FlowFrame(0.1, 10, init_signed_distance(Sphere(1.0), g))]


def test_frames_csv_and_svg(tmp_path):
    path = io.write_frames_csv(_frames(), tmp_path / "frames.csv")
    rows = list(csv.DictReader(open(path)))
    assert {r["kind"] for r in rows} == {"loop", "arc"}
    r = np.array([float(x["r"]) for x in rows if x["kind"] == "loop"])
    z = np.array([float(x["z"]) for x in rows if x["kind"] == "loop"])
    np.testing.assert_allclose(np.hypot(r - 2, z), 0.5, atol=1e-2)
    paths = io.write_frame_svgs(_frames(), tmp_path / "svg")
    root = ET.parse(paths[0]).getroot()
    assert root.tag.endswith("svg")
    assert any(el.tag.endswith("polygon") for el in root)


def test_json_is_deterministic(tmp_path):
    obj = {"b": np.float64(1.5), "a": (np.int64(2), np.bool_(True)), "c": np.arange(3)}
    assert io.dumps(obj) == io.dumps(dict(reversed(list(obj.items()))))
    assert json.loads(io.dumps(obj)) == {"a": [2, True], "b": 1.5, "c": [0, 1, 2]}
    with pytest.raises(TypeError):
        io.dumps({"x": object()})
    assert io.finite_or_none(math.inf) is None and io.finite_or_none(2) == 2.0


def test_series_csv(tmp_path):
    path = io.write_series_csv({"s": [0.0, 0.5], "label": ["A", "B"]}, tmp_path / "x.csv")
    assert open(path).read().splitlines() == ["s,label", "0,A", "0.5,B"]


def _write_config(tmp_path, raw):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(raw))
    return str(p)


def test_cli_simulate(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"surface": {"kind": "torus", "R": 1.0, "rho": 0.3},
                                   "run": {"t_max": 0.3}})
    out = tmp_path / "out"
    code = main(["--config", cfg, "--out", str(out), "--h", str(1 / 32), "simulate"])
    assert code == 0
    report = json.loads((out / "simulate.json").read_text())
    assert report["classification"]["label"] == "A"
    assert (out / "ledger.csv").exists() and (out / "frames.csv").exists()
    assert (out / "profile.csv").read_text().startswith("stage,seconds,calls")
    assert "genus_timeline: pass" in capsys.readouterr().out


def test_cli_bisect_is_byte_stable(tmp_path):
    cfg = _write_config(tmp_path, {"family": {"base": {"kind": "torus", "R": 1.0, "rho": 0.6},
                                              "delta0": -0.3, "delta1": 0.25},
                                   "run": {"t_max": 0.4}, "bisect": {"tol": 0.125}})
    texts = []
    for k in range(2):
        out = tmp_path / f"o{k}"
        assert main(["--config", cfg, "--out", str(out), "--h", "0.03125", "--seed", "3",
                     "bisect"]) == 0
        texts.append((out / "bisect.json").read_bytes())
    assert texts[0] == texts[1]
    assert json.loads(texts[0])["diagnostics"]["seed"] == 3


def test_cli_entropy_of_profile_csv(tmp_path):
    phi = np.linspace(-math.pi / 2, math.pi / 2, 2001)
    p = tmp_path / "sphere.csv"
    with open(p, "w") as fh:
        fh.write("r,z\n")
        for a in phi:
            fh.write(f"{2 * math.cos(a):.15g},{2 * math.sin(a):.15g}\n")
    out = tmp_path / "out"
    assert main(["--out", str(out), "entropy", "--profile", str(p), "--axis-ends"]) == 0
    res = json.loads((out / "entropy.json").read_text())
    assert res["value"] == pytest.approx(4 / math.e, abs=1e-3)


def test_cli_validate_fixtures_only(tmp_path):
    out = tmp_path / "out"
    assert main(["--out", str(out), "validate", "--skip-descent"]) == 0
    rep = json.loads((out / "validate.json").read_text())
    assert all(f["betti1"] == f["expected"] for f in rep["fixtures"])
    assert (out / "fixtures.bin").exists()


def test_cli_reports_configuration_errors(tmp_path, capsys):
    cfg = _write_config(tmp_path, {"nope": 1})
    assert main(["--config", cfg, "--out", str(tmp_path), "validate"]) == 2
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["frobnicate"])
