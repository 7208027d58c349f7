import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from localtime_clt import functionals as F, kac, pathsim


def _as_dict(f):
    return {int(round(x / f.bin_width)): v for x, v in zip(f.x, f.values)}


def _naive_modulus(f, k):
    d = _as_dict(f)
    keys = set(d) | {x - k for x in d}
    return f.bin_width * sum((d.get(x + k, 0.0) - d.get(x, 0.0)) ** 2 for x in keys)


@pytest.mark.parametrize("k", [1, 3, 8])
def test_sq_modulus_matches_naive(k):
    f = pathsim.lattice_local_time(2000, 1 / 8, 12)
    assert math.isclose(F.sq_modulus(f, k / 8), _naive_modulus(f, k), rel_tol=1e-12)


def test_alpha_beta_naive():
    f = pathsim.lattice_local_time(900, 1 / 4, 1)
    g = pathsim.lattice_local_time(700, 1 / 4, 2)
    df, dg = _as_dict(f), _as_dict(g)
    assert math.isclose(F.alpha(f), 0.25 * sum(v * v for v in df.values()), rel_tol=1e-12)
    b = 0.25 * sum(v * dg.get(x, 0.0) for x, v in df.items())
    assert math.isclose(F.beta(f, g), b, rel_tol=1e-12)
    assert F.beta(f, g) == F.beta(g, f)
    assert F.beta(f, f.shifted(10 ** 6)) == 0.0


def test_cross_modulus_reduces_to_modulus():
    f = pathsim.lattice_local_time(1500, 1 / 8, 3)
    assert math.isclose(F.cross_modulus(f, f, 0.5), F.sq_modulus(f, 0.5), rel_tol=1e-12)


def test_probe_and_grid_checks():
    f = pathsim.lattice_local_time(100, 1 / 8, 3)
    g = pathsim.lattice_local_time(100, 1 / 4, 3)
    with pytest.raises(ValueError, match="multiple"):
        F.sq_modulus(f, 0.1)
    with pytest.raises(ValueError, match="mismatch"):
        F.beta(f, g)
    with pytest.raises(ValueError, match="mismatch"):
        F.cross_modulus(f, g, 0.25)


def _hamiltonian_by_pairs(path):
    s = np.concatenate([path.positions])
    diff = np.abs(s[:, None] - s[None, :])
    off = ~np.eye(s.size, dtype=bool)
    return int(np.sum((diff == 0) & off)) - int(np.sum((diff == 1) & off)) // 2


@pytest.mark.parametrize("seed", range(5))
def test_hamiltonian_definition(seed):
    p = pathsim.gen_walk(300, seed)
    assert F.hamiltonian(p) == _hamiltonian_by_pairs(p)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 5000), seed=st.integers(0, 2 ** 64 - 1))
def test_hamiltonian_modulus_identity(n, seed):
    p = pathsim.gen_walk(n, seed)
    f = pathsim.walk_local_time(p)
    assert 2 * (F.hamiltonian(p) + n) == F.sq_modulus(f, 1.0)


@pytest.mark.parametrize("t", [64, 256, 1024])
def test_lattice_offset_corrects_mean(t):
    # exact lattice mean plus the offset reproduces the Brownian mean to O(delta^2)
    k = 16
    d = 1 / k
    n = t * k * k
    cfg_field = pathsim.LocalTimeField(0, d, [t / d], float(t), dt=d * d, source="lattice")
    off = F.lattice_offset(cfg_field)
    assert off == 2 * t * d
    gap = kac.lattice_modulus_mean(n, k, d) + off - kac.modulus_mean(t, 1.0).value
    assert abs(gap) < 0.02


def test_debiased_alpha_mean():
    d = 1 / 64
    n = 64 * 64
    shift = pathsim.LocalTimeField(0, d, [1 / d], 1.0, dt=d * d, source="lattice")
    corr = F.debiased_alpha(shift) - F.alpha(shift)
    assert math.isclose(corr, d)
    assert abs(kac.lattice_alpha_mean(n, d) + corr - kac.alpha_mean(1.0).value) < 1e-3


def test_offset_zero_for_brownian():
    f = pathsim.gen_bm_local_time(pathsim.SimConfig(1.0, 1 / 8), 0)
    assert F.lattice_offset(f) == 0.0
    assert F.debiased_sq_modulus(f, 0.5) == F.sq_modulus(f, 0.5)


def test_normalized_stat_forms():
    f = pathsim.lattice_local_time(16 * 64, 1 / 8, 1)   # t = 16
    g = pathsim.lattice_local_time(16 * 64, 1 / 8, 2)
    m1 = F.sq_modulus(f, 1.0)
    s = F.normalized_stat(f, "single_t", seed=5)
    assert math.isclose(s.value, (m1 - 64.0) / 16 ** 0.75) and s.h == 1.0 and s.seed == 5
    s = F.normalized_stat(f, "single_h", h=0.25)
    assert math.isclose(s.value, (F.sq_modulus(f, 0.25) - 16.0) / 0.125)
    s = F.normalized_stat(f, "cross_t", other=g, centering=1.0)
    assert math.isclose(s.value, (F.cross_modulus(f, g, 1.0) - 1.0) / 8.0)
    s = F.normalized_stat(f, "single_t", debias=True)
    assert math.isclose(s.value, (m1 + 2 * 16 / 8 - 64.0) / 8.0)
    with pytest.raises(ValueError):
        F.normalized_stat(f, "cross_h")
    with pytest.raises(ValueError):
        F.normalized_stat(f, "double")


def test_stat_sample_validation_and_csv():
    with pytest.raises(ValueError):
        F.StatSample(float("nan"), "single_t", 1.0, 1.0, 0)
    with pytest.raises(ValueError):
        F.StatSample(0.0, "single_t", 0.0, 1.0, 0)
    rows = [F.StatSample(0.5, "cross_h", 0.125, 2.0, 3)]
    assert F.stat_samples_csv(rows) == "kind,h,t,seed,value\ncross_h,0.125,2.0,3,0.5\n"


def test_scaling_lattice_exact():
    cfg = pathsim.SimConfig(4.0, 1 / 16, mode="lattice_walk")
    r = F.scaling_check(cfg, 3, 1.0)
    assert r.relative_deviation == 0.0 and r.direct == r.rebinned
    with pytest.raises(ValueError):
        F.scaling_check(cfg, 3, 0.5)


def test_scaling_relabel_is_exact():
    cfg = pathsim.SimConfig(1.0, 1 / 16, dt=(1 / 64) ** 2 / 4)
    r = F.scaling_check(cfg, 1, 0.5)
    assert r.relabel_deviation < 1e-12


def test_scaling_ladder_refines():
    rows = F.scaling_ladder([1 / 16, 1 / 32, 1 / 64], 0.5, seeds=range(8))
    devs = [d for _, d, _ in rows]
    assert devs[0] > devs[1] > devs[2]


def test_hamiltonian_hand_examples():
    assert F.hamiltonian(pathsim.LatticePath(4, [1, -1, 1, 1])) == -2
    assert F.hamiltonian(pathsim.LatticePath(1, [1])) == 0


def test_small_lattice_statistic():
    f = pathsim.LocalTimeField(0, 1.0, [1.0, 2.0, 1.0], 4.0, dt=1.0, source="lattice")
    s = F.normalized_stat(f, "single_t")
    assert s.value == pytest.approx(-12 / 4 ** 0.75)
    assert s.value == pytest.approx(-4.2426, abs=1e-4)
    z = pathsim.LocalTimeField(0, 0.25, [0.0, 0.0], 2.0)
    # -4ht / h^{3/2} = -4t / sqrt(h)
    assert F.normalized_stat(z, "single_h", h=0.25).value == pytest.approx(-4 * 2.0 / 0.5)
    assert F.normalized_stat(f, "cross_t", other=pathsim.LocalTimeField(0, 1.0, [0.0], 4.0)).value == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 63), shift=st.integers(-50, 50), k=st.integers(1, 6))
def test_functional_invariants(seed, shift, k):
    f = pathsim.lattice_local_time(400, 1 / 4, seed)
    g = pathsim.lattice_local_time(300, 1 / 4, seed + 1)
    h = k / 4
    assert F.beta(f, f) == pytest.approx(F.alpha(f), rel=1e-14)
    assert min(F.alpha(f), F.beta(f, g), F.sq_modulus(f, h)) >= 0
    assert F.cross_modulus(f, g, h) == pytest.approx(F.cross_modulus(g, f, h), rel=1e-12, abs=1e-12)
    fs, gs = f.shifted(shift), g.shifted(shift)
    assert F.alpha(fs) == F.alpha(f) and F.sq_modulus(fs, h) == F.sq_modulus(f, h)
    assert F.beta(fs, gs) == F.beta(f, g)
    assert F.cross_modulus(fs, gs, h) == pytest.approx(F.cross_modulus(f, g, h), rel=1e-12, abs=1e-12)
