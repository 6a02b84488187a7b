# coding=utf8
"""Closed-form design of the two-ligament mode converter.

Attachment ordinates, resonance and ε-corrected ligament lengths, and the
leading-order reflection matrices of the Neumann and Dirichlet half
problems.
"""
import json
import logging
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .constants import compute_constants
from .geometry import HALF_GAP, LigamentSpec, WaveguideGeometry
from .modes import ModeBasis

__all__ = [
    'DesignSpec',
    'solve_attachments',
    'resonance_lengths',
    'length_correction',
    'corrected_lengths',
    'predict_half_matrices',
    'eta',
    'predict_ligament_amplitude',
    'design',
    'DesignError',
    'AsymptoticRegimeWarning',
]

logger = logging.getLogger(__name__)

# a correction beyond this share of the critical length is suspicious
REGIME_LIMIT = 0.2


class DesignError(Exception):
    """Class for design recipe errors."""
    pass


class AsymptoticRegimeWarning(UserWarning):
    pass


def _betas(omega):
    if not np.pi < omega < 2 * np.pi:
        msg = 'Frequency omega = {} is outside (pi, 2pi)'
        raise DesignError(msg.format(omega))
    return ModeBasis(omega, 2).betas.real


def solve_attachments(omega):
    """Return (y₋, y₊) with cos²(πy) = β₂/(2β₁).

    y₋ takes the branch cos(πy₋) < 0 and y₊ = 1 - y₋ the branch
    cos(πy₊) > 0.
    """
    beta1, beta2 = _betas(omega)
    root = np.sqrt(beta2 / (2 * beta1))
    y_minus = float(np.arccos(-root) / np.pi)
    return y_minus, 1 - y_minus


def resonance_lengths(omega, m_minus=1, m_plus=2):
    """Return the critical lengths π(m₋ + 1/2)/ω and πm₊/ω."""
    if m_minus < 0 or m_plus < 1:
        msg = 'Resonance orders must satisfy m_minus >= 0 and m_plus >= 1, ' \
              'got {} and {}'
        raise DesignError(msg.format(m_minus, m_plus))
    lengths = (np.pi * (m_minus + 0.5) / omega, np.pi * m_plus / omega)
    for length in lengths:
        if length <= HALF_GAP:
            msg = ('ligament cannot reach symmetry axis: resonance length '
                   '{:.6f} does not exceed {}')
            raise DesignError(msg.format(length, HALF_GAP))
    return lengths


def length_correction(epsilon, c_xi, gamma):
    """Return ε(|ln ε|/π + C_Ξ + Re Γ); zero for ε = 0."""
    if epsilon < 0:
        raise DesignError('Ligament width must be non-negative')
    if epsilon == 0:
        return 0.
    return epsilon * (abs(np.log(epsilon)) / np.pi + c_xi + np.real(gamma))


def corrected_lengths(omega, epsilon, constants, m_minus=1, m_plus=2,
                      y_minus=None, y_plus=None):
    """Shift the critical lengths by the ε-correction.

    Parameters
    ----------
    omega : float
    epsilon : float
    constants : modeconv.constants.AsymptoticConstants
        C_Ξ and Γ at the attachment ordinates.
    m_minus, m_plus : int
    y_minus, y_plus : float, optional
        Attachment ordinates; the tuned ones by default.

    Returns
    -------
    ell_minus_eps, ell_plus_eps : float
    """
    if y_minus is None or y_plus is None:
        y_minus, y_plus = solve_attachments(omega)
    if abs(constants.omega - omega) > 1e-12:
        msg = 'Constants computed at omega = {}, design needs {}'
        raise DesignError(msg.format(constants.omega, omega))

    out = []
    for critical, y in zip(resonance_lengths(omega, m_minus, m_plus),
                           (y_minus, y_plus)):
        shift = length_correction(epsilon, constants.c_xi,
                                  constants.gamma_at(y))
        if abs(shift) > REGIME_LIMIT * critical:
            msg = ('asymptotic regime questionable: length correction {:.4f} '
                   'exceeds {:.0%} of the critical length {:.4f}')
            warnings.warn(msg.format(shift, REGIME_LIMIT, critical),
                          AsymptoticRegimeWarning)
        length = critical - shift
        if length <= HALF_GAP:
            msg = ('ligament cannot reach symmetry axis: corrected length '
                   '{:.6f} does not exceed {}')
            raise DesignError(msg.format(length, HALF_GAP))
        out.append(float(length))
    return tuple(out)


def predict_half_matrices(omega, y, which='N', eta=0.):
    """Leading-order reflection matrix of a half problem with one resonant
    ligament attached at ordinate y.

    With q = 2β₁cos²(πy)/β₂ the ligament amplitudes are
    a₁ = -2/(√β₁·(η + i(1 + q))) for an incident mode 1 and
    a₂ = √2·cos(πy)·√β₁/√β₂·a₁ for mode 2; η = 0 at the tuned length.

    Parameters
    ----------
    omega : float
    y : float
        Attachment ordinate in (0, 1).
    which : {'N', 'D'}
        Condition on the cap; the leading-order formulas coincide, the
        matrix equals (0, 1; 1, 0) for N at y₋ and (0, -1; -1, 0) for D at
        y₊.
    eta : float
        Detuning parameter.

    Returns
    -------
    matrix : numpy.ndarray, shape (2, 2)
    amplitudes : numpy.ndarray, shape (2,)
        a for incident modes 1 and 2.
    """
    if which not in ('N', 'D'):
        msg = "Half problem must be 'N' or 'D', got {!r}"
        raise DesignError(msg.format(which))
    if not 0 < y < 1:
        msg = 'Attachment ordinate must lie in (0, 1), got {}'
        raise DesignError(msg.format(y))
    beta1, beta2 = _betas(omega)
    cos = np.cos(np.pi * y)
    q = 2 * beta1 * cos ** 2 / beta2
    denominator = eta + 1j * (1 + q)

    a1 = -2 / (np.sqrt(beta1) * denominator)
    a2 = -2 * np.sqrt(2) * cos / (np.sqrt(beta2) * denominator)
    coupling = cos * np.sqrt(2) * beta1 / np.sqrt(beta2)
    matrix = np.array([
        [1 + 1j * a1 * np.sqrt(beta1), 1j * a1 * coupling],
        [1j * a2 * np.sqrt(beta1), 1 + 1j * a2 * coupling],
    ])
    return matrix, np.array([a1, a2])


def eta(omega, epsilon, length, critical, c_xi, gamma):
    """Detuning η = ω(|ln ε|/π + C_Ξ + Re Γ + (ℓ - ℓ_crit)/ε)."""
    if epsilon <= 0:
        raise DesignError('Detuning needs a positive ligament width')
    return omega * (abs(np.log(epsilon)) / np.pi + c_xi + np.real(gamma) +
                    (length - critical) / epsilon)


def predict_ligament_amplitude(epsilon, a):
    """Field magnitude |a|/ε inside a resonant ligament of a half problem.

    The full problem superposes the two half problems, so its ligament
    field is half as large.
    """
    return float(np.abs(a) / epsilon)


@dataclass
class DesignSpec(object):
    """Tuned converter parameters.

    Attributes
    ----------
    omega, epsilon : float
    y_minus, y_plus : float
        Attachment ordinates.
    m_minus, m_plus : int
        Resonance orders.
    ell_minus_eps, ell_plus_eps : float
        Corrected ligament lengths.
    constants_used : dict
        Snapshot of the AsymptoticConstants.
    """
    omega: float
    epsilon: float
    y_minus: float
    y_plus: float
    m_minus: int
    m_plus: int
    ell_minus_eps: float
    ell_plus_eps: float
    constants_used: dict = field(default_factory=dict)

    @property
    def critical_lengths(self):
        return resonance_lengths(self.omega, self.m_minus, self.m_plus)

    def to_geometry(self, R=1.5, shape='cosine', domain='full',
                    ell_minus=None, ell_plus=None):
        """Build the waveguide, the ligaments arching away from each other.

        The lengths default to the corrected ones.
        """
        ell_minus = self.ell_minus_eps if ell_minus is None else ell_minus
        ell_plus = self.ell_plus_eps if ell_plus is None else ell_plus
        ligaments = (
            LigamentSpec(self.y_minus, ell_minus, self.epsilon,
                         bend_sign=1, shape=shape),
            LigamentSpec(self.y_plus, ell_plus, self.epsilon,
                         bend_sign=-1, shape=shape),
        )
        return WaveguideGeometry(ligaments=ligaments, R=R, domain=domain)

    def to_dict(self):
        return asdict(self)

    def to_json(self, path):
        with open(path, 'w') as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            return cls.from_dict(json.load(f))


def design(omega, epsilon, m_minus=1, m_plus=2, constants=None, cache=None,
           **mesh_params):
    """Apply the design recipe.

    Constants are computed (through the cache if given) when not supplied
    and ε > 0; mesh_params are passed to
    modeconv.constants.compute_constants. For ε = 0 the lengths are the
    critical ones.

    Returns
    -------
    spec : DesignSpec
    """
    y_minus, y_plus = solve_attachments(omega)
    if epsilon == 0 and constants is None:
        ell_minus, ell_plus = resonance_lengths(omega, m_minus, m_plus)
        snapshot = {}
    else:
        if constants is None:
            # Γ(y₊) = Γ(1 - y₋), one solve serves both ligaments
            constants = compute_constants(omega, (y_minus,), cache=cache,
                                          **mesh_params)
        ell_minus, ell_plus = corrected_lengths(
            omega, epsilon, constants, m_minus, m_plus, y_minus, y_plus)
        snapshot = constants.to_dict()
    logger.info('Design: y- = %.6f, y+ = %.6f, l- = %.6f, l+ = %.6f',
                y_minus, y_plus, ell_minus, ell_plus)
    return DesignSpec(omega=omega, epsilon=epsilon, y_minus=y_minus,
                      y_plus=y_plus, m_minus=m_minus, m_plus=m_plus,
                      ell_minus_eps=ell_minus, ell_plus_eps=ell_plus,
                      constants_used=snapshot)
