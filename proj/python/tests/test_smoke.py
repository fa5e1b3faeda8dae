import json
import math

import numpy as np
import pytest

import difffactor as df


def test_generate_is_seeded():
    a = df.generate_random_diffeo(3, 0.02, 3, 32)
    b = df.generate_random_diffeo(3, 0.02, 3, 32)
    assert a.grid == 32
    assert a.u.shape == (32, 32)
    assert np.array_equal(a.u, b.u) and np.array_equal(a.w, b.w)
    assert a.digest() == b.digest()


def test_json_round_trip():
    f = df.generate_random_diffeo(1, 0.02, 2, 16)
    g = df.TorusDiffeo.from_json(f.to_json())
    assert np.array_equal(f.u, g.u)
    with pytest.raises(df.FormatError):
        df.TorusDiffeo.from_json("{not json")


def test_decompose_reconstructs():
    f = df.generate_random_diffeo(2, 0.02, 3, 32)
    d = df.decompose(f)
    assert d["iterations"] <= 40
    # f1 o f2 at the grid points, by trigonometric interpolation of f1 along y-rows
    n = f.grid
    x = np.arange(n) / n
    v = d["f2"]
    moved = x[:, None] + v
    c = np.fft.fft2(d["f1"]) / n**2
    k = np.fft.fftfreq(n, 1 / n)
    y = x[None, :]
    ex = np.exp(2j * np.pi * k[None, None, :] * moved[:, :, None])
    ey = np.exp(2j * np.pi * k[None, None, :] * np.broadcast_to(y, (n, n))[:, :, None])
    vals = np.einsum("abk,kl,abl->ab", ex, c, ey).real
    assert np.max(np.abs(v - f.u)) < 1e-15 + 1e-9
    assert np.max(np.abs(vals - f.w)) < 1e-9


def test_factor_and_verify():
    f = df.generate_random_diffeo(4, 0.02, 3, 32)
    out = df.factor(f)
    assert out["status"] == "within-bound"
    assert out["commutators"] <= out["bound"] == 6
    cert = json.loads(out["certificate"])
    assert cert["commutator_count"] == out["commutators"]
    report = df.verify(out["certificate"], f)
    assert report["pass"]
    other = df.generate_random_diffeo(5, 0.02, 3, 32)
    assert not df.verify(out["certificate"], other)["pass"]


def test_cohomological_single_mode():
    n = 64
    x = np.arange(n) / n
    s, mean = df.solve_cohomological(np.cos(2 * np.pi * x) + 0.25)
    alpha = (math.sqrt(5) - 1) / 2
    exact = (np.exp(2j * np.pi * x) / (np.exp(2j * np.pi * alpha) - 1)).real
    assert abs(mean - 0.25) < 1e-15
    assert np.max(np.abs(s - exact)) < 1e-12


def test_bounds_and_gate():
    assert df.bounds("S3-hopf")["value"] == 18
    assert df.bounds("compact-group:4")["value"] == 48
    assert df.bounds("gauge:2,3")["value"] == 9
    assert df.n_lower("sl2") == 2
    assert df.n_lower("abelian:2") is None


def test_errors_map_to_python():
    with pytest.raises(df.BasinError):
        df.generate_random_diffeo(1, 0.5, 2, 32)
    with pytest.raises(df.InvalidArgument):
        df.bounds("nonsense")
    assert issubclass(df.BasinError, df.Error)
