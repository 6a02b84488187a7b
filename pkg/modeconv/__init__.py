# coding=utf-8
"""modeconv === Design and finite element verification of waveguide mode
converters built from two thin resonant ligaments."""

# Shortcut
from .constants import AsymptoticConstants, compute_constants
from .design import DesignSpec, design
from .geometry import LigamentSpec, WaveguideGeometry
from .modes import ModeBasis
from .scattering import decompose, full_scattering, half_scattering

# General information
__version__ = '0.1.0'
__author__ = __maintainer__ = 'The modeconv developers'
__email__ = 'modeconv@users.noreply.github.com'


def converter(omega, epsilon, m_minus=1, m_plus=2, constants=None, R=1.5,
              shape='cosine', **mesh_params):
    """Design a converter and solve its full scattering problem.

    Parameters
    ----------
    omega : float
        Frequency in (π, 2π).
    epsilon : float
        Ligament width.
    m_minus, m_plus : int
        Resonance orders of the two ligaments.
    constants : AsymptoticConstants, optional
        Computed on the fly if None.
    R : float
        Truncation abscissa.
    shape : str
        Centerline family.
    mesh_params
        Passed to full_scattering.

    Returns
    -------
    spec : DesignSpec
    matrices : modeconv.scattering.ScatteringMatrices
    """
    spec = design(omega, epsilon, m_minus, m_plus, constants=constants)
    geometry = spec.to_geometry(R=R, shape=shape)
    return spec, full_scattering(geometry, omega, **mesh_params)
