import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmnls.config import ConfigError, RunConfig, parse_config_file
from dmnls.grid import ComplexField, SpatialGrid
from dmnls.snapshot import MAGIC, SnapshotError, snapshot_read, snapshot_write

from helpers import random_field


# --- snapshots ------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 64, 512]),
       st.floats(1e-3, 1e3), st.floats(-1e6, 1e6))
def test_snapshot_round_trip_is_bitwise(tmp_path_factory, seed, n, length, t):
    path = tmp_path_factory.mktemp("snap") / "f.dmnls"
    f = random_field(SpatialGrid(n, length), np.random.default_rng(seed))
    snapshot_write(f, t, path)
    g, t2 = snapshot_read(path)
    assert t2 == t
    assert g.grid == f.grid
    assert g.values.tobytes() == f.values.tobytes()


def test_snapshot_layout(tmp_path, gauss):
    path = tmp_path / "g.dmnls"
    snapshot_write(gauss, 0.25, path)
    data = path.read_bytes()
    assert data[:6] == MAGIC == b"DMNLS1"
    n, length, t = struct.unpack_from("<Idd", data, 6)
    assert (n, length, t) == (gauss.grid.n, gauss.grid.length, 0.25)
    assert len(data) == 6 + 4 + 8 + 8 + 16 * n
    re, im = struct.unpack_from("<dd", data, 26 + 16 * (n // 2))
    assert complex(re, im) == gauss.values[n // 2]


def test_snapshot_errors(tmp_path, gauss):
    path = tmp_path / "g.dmnls"
    snapshot_write(gauss, 1.0, path)
    data = path.read_bytes()

    (tmp_path / "short.dmnls").write_bytes(data[:-5])
    with pytest.raises(SnapshotError, match="length mismatch"):
        snapshot_read(tmp_path / "short.dmnls")

    (tmp_path / "hdr.dmnls").write_bytes(data[:10])
    with pytest.raises(SnapshotError):
        snapshot_read(tmp_path / "hdr.dmnls")

    (tmp_path / "magic.dmnls").write_bytes(b"XXXXXX" + data[6:])
    with pytest.raises(SnapshotError, match="bad magic"):
        snapshot_read(tmp_path / "magic.dmnls")

    bad = bytearray(data)
    bad[26:34] = struct.pack("<d", math.nan)
    (tmp_path / "nan.dmnls").write_bytes(bytes(bad))
    with pytest.raises(SnapshotError, match="non-finite"):
        snapshot_read(tmp_path / "nan.dmnls")


def test_snapshot_refuses_non_finite(tmp_path):
    g = SpatialGrid(8, 1.0)
    with pytest.raises(SnapshotError):
        snapshot_write(ComplexField(g, np.full(8, np.inf)), 0.0, tmp_path / "x.dmnls")


# --- run configuration ----------------------------------------------------------

def test_run_config_defaults():
    cfg = RunConfig()
    assert cfg.grid == SpatialGrid(512, 16 * math.pi)
    assert cfg.fiber.eps == 0.1 and cfg.fiber.d_av == 0.5
    assert cfg.solve_config().quadrature.order == 32
    assert cfg.with_(gamma=0.2).fiber.gamma == 0.2


@pytest.mark.parametrize("kw", [dict(n=100), dict(eps=0.0), dict(gamma=-1.0), dict(t_end=0.0),
                                dict(quad_nodes=0), dict(equation="weird"),
                                dict(initial="/nonexistent/file.dmnls")])
def test_run_config_validation(kw):
    with pytest.raises(ConfigError):
        RunConfig(**kw)


def test_initial_field_from_snapshot(tmp_path, big_grid):
    f = random_field(big_grid, np.random.default_rng(3))
    path = tmp_path / "init.dmnls"
    snapshot_write(f, 0.0, path)
    cfg = RunConfig(initial=str(path))
    assert cfg.initial_field().values.tobytes() == f.values.tobytes()
    with pytest.raises(ConfigError, match="does not match"):
        RunConfig(initial=str(path), n=256).initial_field()


def test_parse_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(
        "# sweep setup\n"
        "n = 256\n"
        "gamma = 0.2   # loss\n"
        "dav=0.7\n"
        "tmax = 0.5\n"
        "steps-per-half-cell = 10\n"
        "quad_nodes = 16\n"
        "eps = 0.1, 0.05, 0.025\n"
        "dealias = yes\n"
        "out = results\n"
        "\n",
        encoding="utf-8",
    )
    kw = parse_config_file(path)
    assert kw == dict(n=256, gamma=0.2, d_av=0.7, t_end=0.5, steps_per_half_cell=10,
                      quad_nodes=16, eps_list=[0.1, 0.05, 0.025], dealias=True, out="results")


@pytest.mark.parametrize("text,match", [
    ("colour = red\n", "unknown key"),
    ("n 256\n", "expected 'key = value'"),
    ("n = many\n", "invalid literal"),
    ("dealias = maybe\n", "boolean"),
])
def test_parse_config_file_errors(tmp_path, text, match):
    path = tmp_path / "bad.cfg"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError, match=match):
        parse_config_file(path)
