import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modeconv.modes import (ContaminationWarning, ExtractionError, ModeBasis,
                            ModeError, Trace, extract_coefficients,
                            mode_trace, propagation_constants)


def test_propagation_constants(omega):
    betas = propagation_constants(omega, 4)
    assert betas[0] == pytest.approx(omega)
    assert betas[1] == pytest.approx(np.sqrt(5) / 2 * np.pi)
    assert betas[2].real == 0
    assert betas[2].imag == pytest.approx(np.sqrt(7) / 2 * np.pi)


@pytest.mark.parametrize('omega, n_modes', [
    (0., 4),
    (-1., 4),
    (3., 1),
])
def test_propagation_constants_invalid(omega, n_modes):
    with pytest.raises(ModeError):
        propagation_constants(omega, n_modes)


def test_propagation_constants_cutoff():
    with pytest.raises(ModeError, match='cut-off wavenumber'):
        propagation_constants(np.pi, 4)
    with pytest.raises(ModeError, match='cut-off wavenumber'):
        propagation_constants(2 * np.pi * (1 + 1e-10), 4)


def test_basis_propagating(basis):
    assert basis.propagating == 2
    assert ModeBasis(2.5 * np.pi).propagating == 3
    assert basis.beta(1) == pytest.approx(basis.omega)


def test_profiles_orthonormal(basis):
    trace = Trace.from_function(lambda y: np.ones_like(y))
    gram = np.array([
        [np.sum(trace.weights * ModeBasis.profile(m, trace.y) *
                ModeBasis.profile(n, trace.y)) for n in range(6)]
        for m in range(6)])
    np.testing.assert_allclose(gram, np.eye(6), atol=1e-12)
    np.testing.assert_allclose(basis.profiles([0.5], 3)[:, 0],
                               [1, 0, -np.sqrt(2)], atol=1e-12)


def test_mode_trace(basis):
    value = mode_trace(basis, 2, '+', 0.3, 0.)
    beta = basis.beta(2).real
    assert value == pytest.approx(np.exp(0.3j * beta) * np.sqrt(2 / beta))
    assert isinstance(value, complex)
    values = mode_trace(basis, 1, -1, 0., np.linspace(0, 1, 5))
    np.testing.assert_allclose(values, 1 / np.sqrt(basis.omega))


def test_mode_trace_evanescent(basis):
    with pytest.raises(ModeError, match='not propagating'):
        mode_trace(basis, 3, 1, 0., 0.5)
    with pytest.raises(ModeError, match='direction'):
        mode_trace(basis, 1, 0, 0., 0.5)
    with pytest.raises(ModeError, match=r'\[0, 1\]'):
        mode_trace(basis, 1, 1, 0., 1.5)


def _left_trace(basis, incident, coefficients, x, x0, evanescent=0.):
    def func(y):
        value = mode_trace(basis, incident, 1, x + x0, y)
        for j, c in enumerate(coefficients, start=1):
            value = value + c * mode_trace(basis, j, -1, x + x0, y)
        return value + evanescent * ModeBasis.profile(2, y)
    return Trace.from_function(func, abscissa=x)


@settings(max_examples=30, deadline=None)
@given(st.complex_numbers(max_magnitude=2, allow_nan=False,
                          allow_infinity=False),
       st.complex_numbers(max_magnitude=2, allow_nan=False,
                          allow_infinity=False),
       st.floats(-3, -0.6))
def test_extract_round_trip(r1, r2, x):
    basis = ModeBasis(1.5 * np.pi)
    trace = _left_trace(basis, 1, (r1, r2), x, 0.5)
    coefficients = extract_coefficients(trace, basis, incident=1, x0=0.5)
    np.testing.assert_allclose(coefficients.values, [r1, r2], atol=1e-12)
    assert not coefficients.contaminated


def test_extract_right(basis):
    x, x0 = 1.5, 0.5
    t = (0.3 - 0.1j, 0.9j)

    def func(y):
        return sum(c * mode_trace(basis, j, 1, x - x0, y)
                   for j, c in enumerate(t, start=1))

    trace = Trace.from_function(func, abscissa=x)
    coefficients = extract_coefficients(trace, basis, x0=x0, side='right')
    np.testing.assert_allclose(coefficients.values, t, atol=1e-12)
    assert coefficients[2] == pytest.approx(0.9j)
    assert coefficients.energy() == pytest.approx(0.1 + 0.81)


def test_extract_contamination(basis):
    trace = _left_trace(basis, 1, (0.5, 0.), -1., 0.5, evanescent=0.1)
    with pytest.warns(ContaminationWarning, match='Evanescent'):
        coefficients = extract_coefficients(trace, basis, incident=1)
    assert coefficients.contaminated
    assert coefficients.contamination == pytest.approx(0.1)


def test_extract_clean_no_warning(basis):
    trace = _left_trace(basis, 2, (0., 1.), -1.5, 0.5)
    with warnings.catch_warnings():
        warnings.simplefilter('error')
        coefficients = extract_coefficients(trace, basis, incident=2)
    assert list(coefficients.rows())[1][3] == pytest.approx(1.)


def test_extract_errors(basis):
    trace = Trace.from_function(lambda y: np.ones_like(y), abscissa=-0.2)
    with pytest.raises(ExtractionError, match='ligament zone'):
        extract_coefficients(trace, basis, x0=0.5)
    trace = Trace.from_function(lambda y: np.ones_like(y), abscissa=1.)
    with pytest.raises(ExtractionError, match='left only'):
        extract_coefficients(trace, basis, incident=1, side='right')
    trace = Trace.from_function(lambda y: np.ones_like(y))
    with pytest.raises(ExtractionError, match='abscissa'):
        extract_coefficients(trace, basis)


def test_trace_from_p2():
    # quadratic field y² on two edges is represented exactly
    y_start = np.array([0., 0.5])
    y_end = np.array([0.5, 1.])
    middle = (y_start + y_end) / 2
    values = np.column_stack([y_start ** 2, y_end ** 2, middle ** 2])
    trace = Trace.from_p2(y_start, y_end, values, abscissa=-1.)
    assert trace.length() == pytest.approx(1.)
    assert trace.project(0) == pytest.approx(1 / 3)
    # ∫ y²·√2 cos(πy) dy = -2√2/π²
    assert trace.project(1) == pytest.approx(-2 * np.sqrt(2) / np.pi ** 2)
