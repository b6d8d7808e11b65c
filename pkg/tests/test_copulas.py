import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import kstest

from patternindep.copulas import (FAMILIES, SAMPLEABLE, CopulaModel, cdf, density, direction,
                                  parse_direction, parse_model, sample, total_mass)
from patternindep.errors import InputFormatError, ParameterOutOfRange, UnsupportedSampler

SAMPLE_CASES = ["fgm:0.5", "fgm:-1", "clayton:-1", "clayton:-0.5", "clayton:0.5", "clayton:3",
                "gaussian:0.5", "gaussian:-0.8", "optc:0.5", "frank:2", "frank:-5"]
GRID = np.linspace(0.05, 0.95, 7)
U, V = np.meshgrid(GRID, GRID, indexing="ij")


@pytest.mark.parametrize("fam", FAMILIES)
def test_direction_is_density_derivative(fam):
    h = 1e-4
    fd = (density(CopulaModel(fam, h), U, V) - density(CopulaModel(fam, -h), U, V)) / (2 * h)
    assert np.allclose(direction(fam)(U, V), fd, atol=1e-6)


@pytest.mark.parametrize("fam", ["FGM", "OptC", "AMH", "Plackett", "Frank", "GFGM", "Clayton"])
def test_density_is_mixed_derivative_of_cdf(fam):
    m = CopulaModel(fam, 0.2)
    h = 1e-4
    fd = (cdf(m, U + h, V + h) - cdf(m, U + h, V - h) - cdf(m, U - h, V + h) + cdf(m, U - h, V - h)) / (4 * h * h)
    assert np.allclose(fd, density(m, U, V), rtol=1e-5)


@pytest.mark.parametrize("fam", FAMILIES)
def test_cdf_margins(fam):
    m = CopulaModel(fam, 0.2)
    assert np.allclose(cdf(m, GRID, 1.0), GRID, atol=1e-7)
    assert np.allclose(cdf(m, 1.0, GRID), GRID, atol=1e-7)


@pytest.mark.parametrize("text", SAMPLE_CASES)
def test_sampler_matches_cdf_on_grid(text):
    m = parse_model(text)
    n = 40000
    pts = sample(m, n, rng=7)
    assert pts.shape == (n, 2) and np.all((pts >= 0) & (pts <= 1))
    edges = np.linspace(0, 1, 6)
    H, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=[edges, edges])
    C = np.array([[cdf(m, a, b) for b in edges] for a in edges], float)
    C[0, :] = 0.0
    C[:, 0] = 0.0
    C[-1, :] = edges
    C[:, -1] = edges
    C[-1, -1] = 1.0
    P = C[1:, 1:] - C[:-1, 1:] - C[1:, :-1] + C[:-1, :-1]
    se = np.sqrt(np.maximum(P * (1 - P), 1e-12) / n)
    assert np.max(np.abs(H / n - P) / np.maximum(se, 1e-4)) < 4.5


@pytest.mark.parametrize("text", SAMPLE_CASES)
def test_sampler_margins_uniform(text):
    pts = sample(parse_model(text), 20000, rng=11)
    assert kstest(pts[:, 0], "uniform").pvalue > 1e-4
    assert kstest(pts[:, 1], "uniform").pvalue > 1e-4


@pytest.mark.parametrize("text", ["fgm:0.5", "clayton:-0.5", "clayton:0.5", "clayton:2", "gaussian:0.5",
                                  "optc:0.5", "amh:0.7", "plackett:2", "frank:3", "gfgm:0.2"])
def test_total_mass(text):
    assert abs(total_mass(parse_model(text)) - 1) < 1e-8


def test_clayton_lower_tail_grows_with_parameter():
    t = 0.01
    vals = [float(cdf(CopulaModel("Clayton", k), t, t)) / t for k in (0.5, 1, 2, 4)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(SAMPLEABLE), st.floats(-0.45, 0.45).filter(lambda x: abs(x) > 1e-3),
       st.integers(0, 2**32 - 1))
def test_sampler_determinism(fam, theta, seed):
    m = CopulaModel(fam, theta)
    a = sample(m, 64, rng=seed)
    b = sample(m, 64, rng=seed)
    assert np.array_equal(a, b)


def test_single_draw_is_a_pair():
    u, v = sample(parse_model("fgm:0.5"), rng=1)
    assert 0 <= u <= 1 and 0 <= v <= 1


@pytest.mark.parametrize("fam", ["AMH", "Plackett", "GFGM"])
def test_unsupported_sampler(fam):
    with pytest.raises(UnsupportedSampler):
        sample(CopulaModel(fam, 0.1), 10)


@pytest.mark.parametrize("text", ["fgm:2", "gaussian:1", "optc:0.6", "clayton:0", "gfgm:0.3", "amh:1.5"])
def test_parameter_ranges(text):
    with pytest.raises(ParameterOutOfRange):
        parse_model(text)


@pytest.mark.parametrize("text", ["fgm", "nope:0.1", "fgm:x"])
def test_parse_errors(text):
    with pytest.raises(InputFormatError):
        parse_model(text)


def test_named_directions():
    assert parse_direction("fgm")(0.0, 0.0) == 1.0
    assert parse_direction("b")(0.0, 0.0) == pytest.approx(2.0)
    assert parse_direction("c")(0.5, 0.0) == pytest.approx(-2.0)
    for name in ("fgm", "b", "c", "clayton", "gaussian", "gfgm"):
        q = parse_direction(name)
        assert abs(q.mean()) < 1e-6


def test_gfgm_direction_has_factor_two():
    assert direction("GFGM")(0.0, 0.0) == 2.0
