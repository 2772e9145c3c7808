import numpy as np
import pytest

import isoflow as iso
from isoflow.kernel import ConsistencyError, load_profile_csv, save_profile_csv

import oracle_utils as oracle


# ---------------------------------------------------------------------------
# bump kernel

def test_normalization(kernel1):
    assert abs(kernel1.l2_norm_sq() - 1.0) < 1e-10


def test_compact_support(kernel1):
    q = np.array([-5.0, -1.0, 1.0, 2.5, 100.0])
    assert np.all(kernel1(q) == 0.0)
    assert np.all(kernel1.derivative(q) == 0.0)
    assert kernel1(0.99) > 0.0


def test_normalization_constant_oracle(kernel1):
    live = 1.0 / np.sqrt(oracle.bump_norm_integral())
    assert kernel1.normalization_constant == pytest.approx(live, rel=1e-12)
    assert kernel1.normalization_constant == pytest.approx(
        oracle.BUMP_NORMALIZATION, rel=1e-12)


def test_invalid_epsilon():
    for eps in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            iso.make_bump_kernel(eps)


def test_derivative_matches_finite_difference(kernel1):
    q = np.linspace(-0.95, 0.95, 41)
    h = 1e-6
    fd = (kernel1(q + h) - kernel1(q - h)) / (2 * h)
    assert np.allclose(kernel1.derivative(q), fd, atol=1e-7)


def test_scaling_rule():
    k2 = iso.make_bump_kernel(0.25)
    k1 = iso.make_bump_kernel(1.0)
    q = np.linspace(-0.3, 0.3, 17)
    assert np.allclose(k2(q), k1(q / 0.25) / np.sqrt(0.25), rtol=1e-14)


# ---------------------------------------------------------------------------
# correlation profile

def test_profile_endpoints(profile1):
    assert profile1.phi(0.0) == 1.0
    assert profile1.phi(2.0) == 0.0
    assert profile1.phi(5.0) == 0.0
    assert len(profile1.grid) == 2048


def test_profile_oracle_values(profile1):
    assert profile1.phi(0.5) == pytest.approx(oracle.BUMP_PHI_05, abs=1e-10)
    assert profile1.phi(0.5) == pytest.approx(oracle.bump_phi(0.5), abs=1e-10)
    assert profile1.phi(0.1) == pytest.approx(oracle.BUMP_PHI_01, abs=1e-10)
    assert profile1.phi(1.0) == pytest.approx(oracle.BUMP_PHI_10, abs=1e-10)


def test_profile_symmetry_and_range(profile1):
    z = np.linspace(0.0, 2.5, 701)
    vals = profile1.phi(z)
    assert np.array_equal(profile1.phi(-z), vals)  # evaluation folds sign
    assert np.all((vals >= 0.0) & (vals <= 1.0))
    interior = profile1.phi(np.linspace(profile1.grid[1], 2.0, 500))
    assert np.all(interior < 1.0)  # strict maximum at 0 only


def test_profile_scaling_law():
    prof_half = iso.build_profile(iso.make_bump_kernel(0.5))
    prof_one = iso.build_profile(iso.make_bump_kernel(1.0))
    z = np.linspace(0.0, 1.0, 101)
    assert np.allclose(prof_half.phi(z), prof_one.phi(z / 0.5), atol=1e-8)
    assert prof_half.z_max == 1.0


def test_grid_step_validation(kernel1):
    with pytest.raises(ValueError):
        iso.build_profile(kernel1, grid_step=0.01)  # only ~201 samples
    with pytest.raises(ValueError):
        iso.build_profile(kernel1, grid_step=-1.0)
    prof = iso.build_profile(kernel1, grid_step=2.0 / 600)
    assert len(prof.grid) >= 512


def test_one_minus_phi_stable(profile1):
    # stable quadratic branch far below float cancellation territory
    val = profile1.one_minus_phi(1e-30)
    assert val == pytest.approx(profile1.beta * 1e-60, rel=1e-6)
    assert profile1.sigma(1e-30) > 0.0
    lg = profile1.log_one_minus_phi_from_log(-200.0)
    assert lg == pytest.approx(np.log(profile1.beta) - 400.0, abs=1e-3)


def test_sigma(profile1):
    assert iso.sigma(profile1, 0.0) == 0.0
    assert iso.sigma(profile1, 2.0) == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert iso.sigma(profile1, -3.0) == pytest.approx(np.sqrt(2.0), abs=1e-12)
    assert iso.sigma(profile1, 0.5) == pytest.approx(oracle.BUMP_SIGMA_05, abs=1e-9)
    z = np.linspace(0, 3, 301)
    assert np.all(iso.sigma(profile1, z) <= np.sqrt(2.0) + 1e-12)


def test_sigma_squared_over_z2_approaches_lprime(kernel1, profile1):
    # sigma^2(z)/z^2 -> l' monotonically on a shrinking ladder
    lp = iso.lyapunov_lprime(kernel1)
    zs = np.array([1e-2, 1e-3, 1e-4])
    ratios = 2.0 * profile1.one_minus_phi_over_z2(zs)
    errs = np.abs(ratios - lp)
    assert np.all(np.diff(errs) < 0)
    assert errs[-1] < 0.01 * lp


# ---------------------------------------------------------------------------
# contraction rate

def test_lprime_oracle(kernel1):
    lp = iso.lyapunov_lprime(kernel1)
    assert lp > 0.0
    assert lp == pytest.approx(oracle.BUMP_LPRIME, rel=1e-10)
    assert lp == pytest.approx(oracle.bump_lprime(), rel=1e-10)


def test_lprime_scaling():
    lp1 = iso.lyapunov_lprime(iso.make_bump_kernel(1.0))
    lp_half = iso.lyapunov_lprime(iso.make_bump_kernel(0.5))
    assert lp_half == pytest.approx(4.0 * lp1, rel=1e-8)


def test_lprime_route_disagreement_raises(kernel1):
    class BrokenKernel(iso.Kernel):
        def derivative(self, q):
            return 2.0 * super().derivative(q)  # inflates the quadrature route 4x

    broken = BrokenKernel(kernel1.epsilon, kernel1.normalization_constant)
    with pytest.raises(ConsistencyError):
        iso.lyapunov_lprime(broken)


def test_lprime_two_route_agreement(kernel1, profile1):
    # quadrature route vs curvature route on the tabulated profile
    lp = iso.lyapunov_lprime(kernel1)
    h = 1e-2
    d1 = 2.0 * profile1.one_minus_phi(h) / h**2
    d2 = 2.0 * profile1.one_minus_phi(h / 2) / (h / 2) ** 2
    richardson = (4.0 * d2 - d1) / 3.0
    assert abs(richardson - lp) / lp < 1e-4
    assert profile1.beta == pytest.approx(lp / 2.0, rel=1e-4)


# ---------------------------------------------------------------------------
# user tables

def test_table_round_trip(profile1):
    rebuilt = iso.profile_from_table(profile1.grid, profile1.phi_values)
    z = np.linspace(0, 2, 257)
    assert np.allclose(rebuilt.phi(z), profile1.phi(z), atol=1e-6)


def test_table_validation():
    z = np.linspace(0, 8, 100)
    good = np.exp(-(z**2))
    with pytest.raises(ValueError, match="index 0"):
        iso.profile_from_table(z, good * 0.9)
    bad_z = z.copy()
    bad_z[5] = bad_z[4]
    with pytest.raises(ValueError, match="index 5"):
        iso.profile_from_table(bad_z, good)
    bad_v = good.copy()
    bad_v[7] = 1.2
    with pytest.raises(ValueError, match="index 7"):
        iso.profile_from_table(z, bad_v)
    with pytest.raises(ValueError, match="start at 0"):
        iso.profile_from_table(z + 1.0, good)


def test_gaussian_table_beta():
    # analytic limit (1 - exp(-z^2)) / z^2 -> 1
    z = np.linspace(0, 8, 1600)
    prof = iso.profile_from_table(z, np.exp(-(z**2)))
    assert prof.beta == pytest.approx(1.0, abs=1e-3)
    assert prof.beta_residual < 1e-3


def test_profile_csv_round_trip(profile1, tmp_path):
    path = tmp_path / "profile.csv"
    save_profile_csv(profile1, path)
    loaded = load_profile_csv(path)
    assert np.array_equal(loaded.grid, profile1.grid)
    assert np.array_equal(loaded.phi_values, profile1.phi_values)


def test_profile_csv_version_rejected(profile1, tmp_path):
    path = tmp_path / "profile.csv"
    save_profile_csv(profile1, path)
    text = path.read_text().replace("schema_version=1", "schema_version=9")
    path.write_text(text)
    with pytest.raises(ValueError, match="schema_version"):
        load_profile_csv(path)
