import math

import numpy as np
import pytest

from quenchlab import io
from quenchlab.analysis import BoundsReport, ConvergenceReport, RateFit
from quenchlab.config import ConfigError, load_config, parse_config
from quenchlab.core import ExperimentConfig
from quenchlab.ic import example_A
from quenchlab.integrate import QuenchReport, run

BASIC = """\
[ic]
name = example_A

[grid]
N = 124
"""


def test_parse_builtin():
    loaded = parse_config(BASIC)
    cfg = loaded.experiment
    spec, ic = example_A()
    assert cfg.problem == spec and cfg.ic == ic and cfg.N == 124
    assert loaded.raw == {"ic": {"name": "example_A"}, "grid": {"N": "124"}}


def test_parse_explicit_coefficients_and_overrides():
    text = """\
[problem]
a = 0.125
p = 1
q = 1
r = 3
[ic]
c0 = 0.25
c1 = 4
c2 = 4
[grid]
N = 20
[stepping]
mode = fixed   # inline comment
max_time = 1e-4
"""
    cfg = parse_config(text).experiment
    assert cfg.problem.r == 3.0 and cfg.ic.coeffs == (0.25, 4.0, 4.0)
    assert cfg.mode == "fixed" and cfg.max_time == 1e-4


@pytest.mark.parametrize("text,lineno", [
    ("[ic]\nname = example_A\n[grid]\nN = 124\nbogus = 1\n", 5),
    ("[ic]\nname = example_A\n[grid]\nN = 12.5\n", 4),
    ("[ic]\nname = example_A\n[grid]\nN = 124\nthis line is broken\n", 5),
    ("[ic]\nname = example_Z\n[grid]\nN = 124\n", 2),
    ("[ic]\nname = example_A\n[wat]\nN = 124\n", 3),
    ("[ic]\nname = example_A\n[grid]\nN = 124\n[stepping]\ntau_min = 1\n", 5),
])
def test_config_errors_carry_line_numbers(text, lineno):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "x.ini")
    assert info.value.lineno == lineno
    assert str(info.value).startswith(f"x.ini:{lineno}:")


def test_missing_grid_and_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config("[ic]\nname = example_A\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.ini")


def test_relative_output_dir(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text(BASIC + "[output]\noutput_dir = out\n")
    assert load_config(path).experiment.output_dir == tmp_path / "out"


@pytest.fixture(scope="module")
def short_run():
    spec, ic = example_A()
    cfg = ExperimentConfig(spec, ic, 30, sample_stride=7, tail_samples=20, max_steps=500)
    return run(cfg)


def test_trajectory_round_trip(tmp_path, short_run):
    rec, _ = short_run
    path = tmp_path / "traj.csv"
    io.write_trajectory(rec, path)
    assert path.read_text().splitlines()[0] == io.TRAJECTORY_HEADER
    back = io.read_trajectory(path, rec.termination, rec.step_count)
    for name in rec.COLUMNS:
        np.testing.assert_array_equal(getattr(back, name), getattr(rec, name))


def test_read_csv_rejects_wrong_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        io.read_csv(path, io.TRAJECTORY_HEADER)


def test_json_round_trips(tmp_path):
    q = QuenchReport("right", 1.9e-3, 1e-4, 0.9987, math.nan)
    b = BoundsReport("right", 4e-5, 2.4, 0.255)
    f = RateFit(0.2546, 0.1, 1e-3, (1e-6, 1e-4), 990)
    c = ConvergenceReport(np.array([1.0, 2.0]), 1.5, np.array([0, 3]))
    path = tmp_path / "s.json"
    io.write_json(path, {"q": q.to_dict(), "b": b.to_dict(), "f": f.to_dict(), "c": c.to_dict(),
                         "n": np.float64(2.5)})
    d = io.read_json(path)
    assert d["q"]["blowup_indicator"] is None
    q2 = io.quench_from_dict(d["q"])
    assert q2.side == q.side and q2.T_est == q.T_est and math.isnan(q2.blowup_indicator)
    assert io.bounds_from_dict(d["b"]) == b
    assert io.ratefit_from_dict(d["f"]) == f
    c2 = io.convergence_from_dict(d["c"])
    np.testing.assert_array_equal(c2.per_node_order, c.per_node_order)
    assert d["n"] == 2.5
