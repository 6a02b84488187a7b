import numpy as np
from pytest import fixture

from modeconv.design import DesignSpec, resonance_lengths, solve_attachments
from modeconv.geometry import LigamentSpec, WaveguideGeometry
from modeconv.modes import ModeBasis

OMEGA = 1.5 * np.pi


def gamma_series(y, omega, n_max=20000):
    """Γ(y) from the modal series of the half-channel Green's function."""
    n = np.arange(1, n_max + 1)
    square = omega ** 2 - (n * np.pi) ** 2
    # i/β_n, β_n = i·sqrt(n²π² - ω²) for evanescent modes
    inverse = np.where(square > 0,
                       1j / np.sqrt(np.abs(square)),
                       1 / np.sqrt(np.abs(square)))
    terms = 2 * np.cos(n * np.pi * y) ** 2 * (inverse - 1 / (n * np.pi))
    return (1j / omega + terms.sum() -
            np.log(2 * np.pi * np.sin(np.pi * y)) / np.pi)


@fixture
def omega():
    return OMEGA


@fixture
def basis():
    return ModeBasis(OMEGA, 15)


@fixture
def straight_half():
    return WaveguideGeometry.straight(R=1.5, domain='half')


@fixture
def straight_full():
    return WaveguideGeometry.straight(R=1.5, domain='full')


@fixture
def critical_spec():
    """Converter at ε = 0.01 with the uncorrected lengths 1 and 4/3."""
    y_minus, y_plus = solve_attachments(OMEGA)
    ell_minus, ell_plus = resonance_lengths(OMEGA, 1, 2)
    return DesignSpec(omega=OMEGA, epsilon=0.01, y_minus=y_minus,
                      y_plus=y_plus, m_minus=1, m_plus=2,
                      ell_minus_eps=ell_minus, ell_plus_eps=ell_plus)


@fixture
def one_ligament():
    """Half geometry with a single ligament of resonant length 1."""
    spec = LigamentSpec(y_attach=0.3, length=1., width=0.02, bend_sign=-1)
    return WaveguideGeometry(ligaments=(spec,), R=1.5, domain='half')


@fixture(scope='session')
def tuned_spec():
    """Designed converter at ε = 0.01, constants computed once."""
    from modeconv.design import design
    return design(OMEGA, 0.01, 1, 2)


@fixture
def gamma_oracle():
    return gamma_series


@fixture(scope='session')
def tuned_full(tuned_spec):
    """Full problem of the designed converter, default mesh."""
    from modeconv.scattering import full_scattering
    return full_scattering(tuned_spec.to_geometry(), OMEGA)
