# coding=utf8
"""Transverse modes of the straight channel of unit height, the normalized
mode traces w±_i and projection of cross-section traces onto the modes."""
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
from numpy.polynomial.legendre import leggauss

__all__ = [
    'ModeBasis',
    'ModeCoefficients',
    'Trace',
    'propagation_constants',
    'mode_trace',
    'extract_coefficients',
    'ModeError',
    'ExtractionError',
    'ContaminationWarning',
]

CUTOFF_TOLERANCE = 1e-8

# default quadrature used by Trace.from_function
TRACE_RULE = MappingProxyType({
    'n_panels': 16,
    'order': 16,
})


class ModeError(Exception):
    """Class for mode basis related errors."""
    pass


class ExtractionError(Exception):
    """Class for coefficient extraction errors."""
    pass


class ContaminationWarning(UserWarning):
    """Evanescent part of a trace is not negligible."""
    pass


def propagation_constants(omega, n_modes, tol=CUTOFF_TOLERANCE):
    """Return longitudinal constants β_n, n = 0 .. n_modes - 1.

    Parameters
    ----------
    omega : float
        Wavenumber, the channel height being 1.
    n_modes : int
        Number of retained transverse modes.
    tol : float
        Relative distance to a cut-off nπ below which the wavenumber is
        rejected.

    Returns
    -------
    betas : numpy.ndarray of complex
        sqrt(ω² - n²π²) for propagating modes, i·sqrt(n²π² - ω²) for
        evanescent ones.

    Raises
    ------
    ModeError
        When omega is not positive, n_modes < 2 or omega is at a cut-off.
    """
    if omega <= 0:
        msg = 'Wavenumber must be positive, got {}'
        raise ModeError(msg.format(omega))
    if n_modes < 2:
        msg = 'At least two modes must be retained, got {}'
        raise ModeError(msg.format(n_modes))

    nearest = int(round(omega / np.pi))
    if nearest >= 1 and abs(omega - nearest * np.pi) <= tol * omega:
        msg = 'cut-off wavenumber: omega = {} is within {} of {}*pi'
        msg = msg.format(omega, tol * omega, nearest)
        raise ModeError(msg)

    n = np.arange(n_modes)
    square = omega ** 2 - (n * np.pi) ** 2
    root = np.sqrt(np.abs(square))
    return np.where(square > 0, root + 0j, 1j * root)


class ModeBasis(object):
    """Transverse modes φ_n of the channel 0 < y < 1.

    φ_0 = 1 and φ_n = √2·cos(nπy); they are orthonormal on (0, 1). Mode
    indices used by traces and coefficients are 1-based, mode i having the
    transverse profile φ_{i-1}.

    Attributes
    ----------
    omega : float
    n_modes : int
    betas : numpy.ndarray of complex
    """

    def __init__(self, omega, n_modes=15, cutoff_tol=CUTOFF_TOLERANCE):
        self.omega = float(omega)
        self.n_modes = int(n_modes)
        self.betas = propagation_constants(self.omega, self.n_modes,
                                           tol=cutoff_tol)

    def __repr__(self):
        return 'ModeBasis(omega={!r}, n_modes={!r})'.format(
            self.omega, self.n_modes)

    @property
    def propagating(self):
        """Number of propagating modes."""
        return int(np.count_nonzero(self.betas.imag == 0))

    def beta(self, mode):
        """Return β of the 1-based mode."""
        return self.betas[mode - 1]

    @staticmethod
    def profile(n, y):
        """Return φ_n(y); y could be an array."""
        y = np.asarray(y, dtype=float)
        if n == 0:
            return np.ones_like(y)
        return np.sqrt(2.) * np.cos(n * np.pi * y)

    def profiles(self, y, n_terms=None):
        """Return an array (n_terms, len(y)) of φ_n(y)."""
        n_terms = self.n_modes if n_terms is None else n_terms
        y = np.atleast_1d(np.asarray(y, dtype=float))
        n = np.arange(n_terms)[:, None]
        values = np.sqrt(2.) * np.cos(n * np.pi * y[None, :])
        values[0] = 1.
        return values

    def check_propagating(self, mode):
        if not 1 <= mode <= self.propagating:
            msg = ('Mode {} is not propagating at omega = {} '
                   '(propagating modes: 1..{})')
            msg = msg.format(mode, self.omega, self.propagating)
            raise ModeError(msg)


def mode_trace(basis, mode, direction, x_rel, y):
    """Evaluate w±_i(x_rel, y) = e^{±iβ_i x_rel}·φ_{i-1}(y)/√β_i.

    Parameters
    ----------
    basis : ModeBasis
    mode : int
        1-based propagating mode index.
    direction : int or str
        +1 / '+' for the right-going wave, -1 / '-' for the left-going one.
    x_rel : float or array
        Abscissa shifted to the reference cross-section.
    y : float or array
        Ordinates in [0, 1].

    Returns
    -------
    value : complex or numpy.ndarray
    """
    basis.check_propagating(mode)
    sign = _direction_sign(direction)

    y_arr = np.asarray(y, dtype=float)
    if np.any(y_arr < -1e-12) or np.any(y_arr > 1 + 1e-12):
        raise ModeError('Ordinates must lie in [0, 1]')

    beta = basis.beta(mode).real
    values = (np.exp(sign * 1j * beta * np.asarray(x_rel)) /
              np.sqrt(beta) * ModeBasis.profile(mode - 1, y_arr))
    if np.ndim(values) == 0:
        return complex(values)
    return values


def _direction_sign(direction):
    if direction in (1, '+'):
        return 1
    if direction in (-1, '-'):
        return -1
    raise ModeError('Unknown wave direction: {!r}'.format(direction))


class Trace(object):
    """A field sampled on the Gauss nodes of a vertical cross-section.

    Attributes
    ----------
    y : numpy.ndarray
        Quadrature nodes along the section.
    weights : numpy.ndarray
        Quadrature weights.
    values : numpy.ndarray of complex
        Field values at the nodes.
    abscissa : float or None
        x of the cross-section.
    """

    def __init__(self, y, weights, values, abscissa=None):
        self.y = np.asarray(y, dtype=float)
        self.weights = np.asarray(weights, dtype=float)
        self.values = np.asarray(values, dtype=complex)
        self.abscissa = abscissa
        if not self.y.shape == self.weights.shape == self.values.shape:
            raise ExtractionError('Trace arrays must have the same shape')

    @classmethod
    def from_function(cls, func, n_panels=TRACE_RULE['n_panels'],
                      order=TRACE_RULE['order'], abscissa=None):
        """Sample func(y) with a composite Gauss rule on (0, 1)."""
        nodes, weights = _composite_gauss(np.linspace(0, 1, n_panels + 1),
                                          order)
        return cls(nodes, weights, func(nodes), abscissa=abscissa)

    @classmethod
    def from_p2(cls, y_start, y_end, values, order=6, abscissa=None):
        """Build a trace from quadratic elements of a section.

        Parameters
        ----------
        y_start, y_end : array_like, shape (n_edges,)
            End points of the section edges.
        values : array_like, shape (n_edges, 3)
            Nodal values at the start, end and midpoint of every edge.
        """
        y_start = np.asarray(y_start, dtype=float)
        y_end = np.asarray(y_end, dtype=float)
        values = np.asarray(values)

        t, w = leggauss(order)
        t = (t + 1) / 2
        w = w / 2
        shape = np.stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1),
                          4 * t * (1 - t)])

        length = np.abs(y_end - y_start)
        y = y_start[:, None] + (y_end - y_start)[:, None] * t[None, :]
        weights = length[:, None] * w[None, :]
        sampled = values @ shape
        return cls(y.ravel(), weights.ravel(), sampled.ravel(),
                   abscissa=abscissa)

    def project(self, n):
        """Return ∫ f(y)·φ_n(y) dy."""
        return np.sum(self.weights * self.values *
                      ModeBasis.profile(n, self.y))

    def projections(self, n_terms):
        """Return ∫ f·φ_n dy for n = 0 .. n_terms - 1."""
        return np.array([self.project(n) for n in range(n_terms)])

    def length(self):
        return float(np.sum(self.weights))


def _composite_gauss(breaks, order):
    t, w = leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = (a + b) / 2 + (b - a) / 2 * t[None, :]
    weights = (b - a) / 2 * w[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass(frozen=True)
class ModeCoefficients(object):
    """Coefficients of the outgoing propagating modes on a cross-section.

    `values[j - 1]` is the coefficient of mode j in the decomposition of
    the scattered field, normalized as the r_ij (left) or t_ij (right)
    entries of the scattering matrices.
    """
    values: np.ndarray
    abscissa: float
    side: str = 'left'
    incident: int = None
    evanescent: np.ndarray = field(default_factory=lambda: np.zeros(0))
    contamination: float = 0.
    contaminated: bool = False

    def __getitem__(self, mode):
        return self.values[mode - 1]

    def energy(self):
        """Return Σ|c_j|² over the propagating modes."""
        return float(np.sum(np.abs(self.values) ** 2))

    def rows(self):
        """Yield CSV rows: mode, Re, Im, |c|², abscissa."""
        for j, value in enumerate(self.values, start=1):
            yield (j, value.real, value.imag, abs(value) ** 2,
                   self.abscissa)


def extract_coefficients(trace, basis, incident=None, x0=0.5, side='left',
                         contamination_tol=1e-2):
    """Extract the outgoing mode coefficients from a cross-section trace.

    On the left section x = -R the trace is u = w⁺_i(x + x0) +
    Σ r_ij w⁻_j(x + x0) + evanescent part; the incident wave is subtracted
    and the remainder is projected on φ_{j-1} with the weight √β_j and the
    phase e^{iβ_j(x0 - R)}. On the right section x = R the trace is
    Σ t_ij w⁺_j(x - x0) + evanescent part.

    Parameters
    ----------
    trace : Trace
        Trace with its abscissa set.
    basis : ModeBasis
    incident : int, optional
        1-based incident mode, left sections only.
    x0 : float
        Distance from the symmetry axis to the reference cross-sections.
    side : {'left', 'right'}
    contamination_tol : float
        Threshold on the first evanescent projection.

    Returns
    -------
    coefficients : ModeCoefficients

    Raises
    ------
    ExtractionError
        If the section is not in the straight part of the channel.
    """
    x = trace.abscissa
    if x is None:
        raise ExtractionError('Trace abscissa is unknown')
    if side == 'left':
        if x >= -x0:
            msg = ('Cross-section x = {} intersects the ligament zone '
                   '|x| < {}')
            raise ExtractionError(msg.format(x, x0))
        x_rel = x + x0
    elif side == 'right':
        if x <= x0:
            msg = ('Cross-section x = {} intersects the ligament zone '
                   '|x| < {}')
            raise ExtractionError(msg.format(x, x0))
        if incident is not None:
            raise ExtractionError('Incident wave enters from the left only')
        x_rel = x - x0
    else:
        raise ExtractionError('Unknown side: {!r}'.format(side))

    values = trace.values
    if incident is not None:
        values = values - mode_trace(basis, incident, +1, x_rel, trace.y)
    scattered = Trace(trace.y, trace.weights, values, abscissa=x)

    n_prop = basis.propagating
    betas = basis.betas[:n_prop].real
    proj = scattered.projections(basis.n_modes)

    # outgoing phase e^{∓iβ x_rel} removed
    sign = 1 if side == 'left' else -1
    coefficients = np.sqrt(betas) * np.exp(sign * 1j * betas * x_rel) * \
        proj[:n_prop]

    evanescent = proj[n_prop:]
    contamination = float(abs(evanescent[0])) if evanescent.size else 0.
    contaminated = contamination > contamination_tol
    if contaminated:
        msg = ('Evanescent contamination {:.2e} at x = {} exceeds {:.1e}; '
               'move the cross-section away from the ligaments')
        warnings.warn(msg.format(contamination, x, contamination_tol),
                      ContaminationWarning)

    return ModeCoefficients(
        values=coefficients,
        abscissa=float(x),
        side=side,
        incident=incident,
        evanescent=evanescent,
        contamination=contamination,
        contaminated=contaminated,
    )
