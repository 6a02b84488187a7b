import numpy as np
import pytest
from scipy.special import hankel1

from modeconv.constants import (FLUX_TOL, AsymptoticConstants,
                                ConstantsCache, ConstantsError, compute_c_xi,
                                compute_gamma, flux_residual,
                                singular_constant)
from modeconv.modes import ModeBasis

C_XI = (1 + np.log(np.pi / 2)) / np.pi


def test_singular_constant(omega):
    r = 1e-6
    value = 0.5j * hankel1(0, omega * r) - np.log(1 / r) / np.pi
    assert value == pytest.approx(singular_constant(omega), abs=1e-8)


def test_gamma_series_oracle(gamma_oracle, omega):
    # Im(ωΓ) is exact in the modal series
    for y in (0.3, 0.5, 0.709):
        assert flux_residual(y, omega, gamma_oracle(y, omega)) < 1e-12


def _far_field(y, omega):
    betas = ModeBasis(omega, 2).betas.real
    return [1j / np.sqrt(betas[0]),
            1j * np.sqrt(2) * np.cos(np.pi * y) / np.sqrt(betas[1])]


def _check_gamma(result, y, omega, oracle):
    assert result.value == pytest.approx(oracle(y, omega), abs=1e-2)
    assert flux_residual(y, omega, result.value) < 1e-2
    np.testing.assert_allclose(result.far_field, _far_field(y, omega),
                               atol=1e-2)


@pytest.mark.parametrize('y', [0.3, 0.5])
def test_gamma_against_series(gamma_oracle, omega, y):
    result = compute_gamma(y, omega, estimate_error=False)
    _check_gamma(result, y, omega, gamma_oracle)
    assert np.isnan(result.error)
    assert result.provenance['r0'] == pytest.approx(0.1)
    assert result.provenance['annulus_h'] == pytest.approx(0.1 / 24)


@pytest.mark.slow
@pytest.mark.parametrize('y', np.linspace(0.1, 0.9, 9))
def test_gamma_ordinate_grid(gamma_oracle, omega, y):
    result = compute_gamma(y, omega, estimate_error=False)
    _check_gamma(result, y, omega, gamma_oracle)


@pytest.mark.slow
@pytest.mark.parametrize('y', [0.3, 0.5])
def test_gamma_cutoff_independence(omega, y):
    wide = compute_gamma(y, omega, r0=0.1, estimate_error=False)
    narrow = compute_gamma(y, omega, r0=0.05, estimate_error=False)
    assert narrow.value == pytest.approx(wide.value, abs=1e-4)


def test_gamma_symmetry(omega):
    # 1 - 0.7 is not exactly 0.3 in floating point
    low = compute_gamma(0.3, omega, estimate_error=False)
    high = compute_gamma(0.7, omega, estimate_error=False)
    assert low.value == high.value
    assert low.far_field == high.far_field
    assert high.y == 0.7


def test_gamma_invalid(omega):
    with pytest.raises(ConstantsError, match='cutoff too large'):
        compute_gamma(0.3, omega, r0=0.2)
    with pytest.raises(ConstantsError, match='cutoff too large'):
        compute_gamma(0.5, omega, R=0.6)
    with pytest.raises(ConstantsError, match='ordinate'):
        compute_gamma(1., omega)


def test_gamma_error_estimate(omega):
    result = compute_gamma(0.5, omega, h=0.1)
    assert 0 < result.error < 0.1


def test_gamma_cache(tmp_path, omega):
    path = str(tmp_path / 'constants.json')
    cache = ConstantsCache(path)
    first = compute_gamma(0.3, omega, estimate_error=False, cache=cache)
    assert len(cache) == 1
    reloaded = ConstantsCache(path)
    assert ConstantsCache.gamma_key(omega, 0.3, 0.05, 3, 1.5, 0.1, 15) \
        in reloaded
    assert ConstantsCache.gamma_key(omega, 0.3, 0.05, 3, 1.5, 0.05, 15) \
        not in reloaded
    second = compute_gamma(0.7, omega, estimate_error=False, cache=reloaded)
    assert second.value == first.value
    assert second.far_field == pytest.approx(first.far_field)


def test_c_xi_invalid():
    with pytest.raises(ConstantsError, match='truncation too small'):
        compute_c_xi(rho=4.)
    with pytest.raises(ConstantsError, match='two truncation radii'):
        compute_c_xi(refinements=1)


def test_c_xi_flux_audit():
    result = compute_c_xi(h=0.2, levels=1, refinements=2, tol=1.)
    # measured from the arc gradients, so discretization error is visible
    assert 1e-12 < result.flux_balance < FLUX_TOL
    assert result.provenance['refinements'] == 2


@pytest.mark.slow
def test_c_xi():
    result = compute_c_xi()
    assert result.value == pytest.approx(C_XI, abs=1e-2)
    assert result.error < 1e-3
    assert result.flux_balance < FLUX_TOL
    assert len(result.estimates) == 3


def test_asymptotic_constants_round_trip():
    constants = AsymptoticConstants(
        c_xi=C_XI, omega=1.5 * np.pi, gamma={0.29: 0.1 + 0.4j},
        errors={'c_xi': 1e-4, 0.29: 1e-3})
    assert constants.gamma_at(0.71) == 0.1 + 0.4j
    with pytest.raises(ConstantsError, match='not available'):
        constants.gamma_at(0.5)
    restored = AsymptoticConstants.from_dict(constants.to_dict())
    assert restored.gamma == constants.gamma
    assert restored.errors == constants.errors
