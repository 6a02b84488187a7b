# coding=utf8
"""Ligament-perturbed waveguides: ligament specifications, their
centerlines and the geometry of the full and half domains.

The channels occupy x < -x0 and x > x0 with 0 < y < 1. Every ligament
leaves the wall x = -1/2 at A = (-1/2, y_attach) with a horizontal tangent,
reaches the symmetry axis x = 0 with a horizontal tangent, and is mirrored
to the right channel in the full domain.
"""
from dataclasses import dataclass, field, replace
from types import MappingProxyType

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.spatial import cKDTree

__all__ = [
    'LigamentSpec',
    'Centerline',
    'CosineArchCenterline',
    'ArcCenterline',
    'WaveguideGeometry',
    'build_centerline',
    'GeometryError',
]

HALF_GAP = 0.5
SHAPES = ('cosine', 'arc')
# vertical band the centerlines are allowed to span
BAND = (-1.5, 2.5)
# largest admissible ratio between the half width and the curvature radius
MAX_CURVATURE_RATIO = 0.9
ARC_RADIUS = 0.25
# smallest relative tolerance brentq accepts
BRENTQ_RTOL = 4 * np.finfo(float).eps

DOMAINS = MappingProxyType({
    'full': 'symmetric domain with both channels',
    'half': 'left half, x < 0, with the end caps on x = 0',
})


class GeometryError(Exception):
    """Class for waveguide geometry errors."""
    pass


@dataclass(frozen=True)
class LigamentSpec(object):
    """Thin ligament attached at (-1/2, y_attach).

    Attributes
    ----------
    y_attach : float
        Attachment ordinate in (0, 1).
    length : float
        Centerline arc length from the attachment point to the symmetry axis.
    width : float
        Ligament width ε.
    bend_sign : int
        +1 if the ligament arches upwards, -1 downwards.
    shape : str
        Centerline family, 'cosine' or 'arc'.
    """
    y_attach: float
    length: float
    width: float
    bend_sign: int = 1
    shape: str = 'cosine'

    def __post_init__(self):
        if not 0 < self.y_attach < 1:
            msg = 'Attachment ordinate must lie in (0, 1), got {}'
            raise GeometryError(msg.format(self.y_attach))
        if self.width <= 0:
            msg = 'Ligament width must be positive, got {}'
            raise GeometryError(msg.format(self.width))
        if self.length <= HALF_GAP:
            msg = ('Ligament of length {} cannot reach the symmetry axis '
                   '(length must exceed {})')
            raise GeometryError(msg.format(self.length, HALF_GAP))
        if self.bend_sign not in (-1, 1):
            msg = 'Bend sign must be +1 or -1, got {}'
            raise GeometryError(msg.format(self.bend_sign))
        if self.shape not in SHAPES:
            msg = 'Unknown centerline family: {!r}, expected one of {}'
            raise GeometryError(msg.format(self.shape, SHAPES))

    @property
    def attachment(self):
        return np.array([-HALF_GAP, self.y_attach])

    def to_dict(self):
        return {
            'y_attach': self.y_attach,
            'length': self.length,
            'width': self.width,
            'bend_sign': self.bend_sign,
            'shape': self.shape,
        }


class Centerline(object):
    """Arc-length parametrized ligament centerline.

    Subclasses implement `point` and `tangent` for arrays of arc lengths
    in [0, length].
    """

    def __init__(self, spec):
        self.spec = spec
        self.length = spec.length
        self.curvature_max = 0.

    def point(self, s):
        raise NotImplementedError

    def tangent(self, s):
        raise NotImplementedError

    def normal(self, s):
        """Unit left normal."""
        t = self.tangent(s)
        return np.stack([-t[..., 1], t[..., 0]], axis=-1)

    def sample(self, n):
        """Return n + 1 points evenly spaced in arc length."""
        return self.point(np.linspace(0, self.length, n + 1))

    def y_range(self):
        y = self.sample(2000)[:, 1]
        return float(y.min()), float(y.max())

    def _check_fit(self, band=BAND,
                   max_curvature_ratio=MAX_CURVATURE_RATIO):
        spec = self.spec
        ratio = self.curvature_max * spec.width / 2
        if ratio >= max_curvature_ratio:
            msg = ('Ligament does not fit: curvature radius {:.4g} of the '
                   'centerline is too small for the width {}')
            msg = msg.format(1 / self.curvature_max, spec.width)
            raise GeometryError(msg)

        low, high = self.y_range()
        if low - spec.width / 2 < band[0] or high + spec.width / 2 > band[1]:
            msg = ('Ligament does not fit: the centerline spans '
                   'y in [{:.4g}, {:.4g}], outside the band {}')
            raise GeometryError(msg.format(low, high, band))


class CosineArchCenterline(Centerline):
    """y(x) = y_attach + bend·A·sin²(2π(x + 1/2)) on -1/2 <= x <= 0,
    the amplitude A being chosen to match the requested arc length."""

    _panels = 256
    _order = 8

    def __init__(self, spec):
        super(CosineArchCenterline, self).__init__(spec)
        self.amplitude = self._solve_amplitude(spec.length)
        self.curvature_max = 8 * np.pi ** 2 * self.amplitude
        self._build_table()

    @staticmethod
    def _speed(x, amplitude):
        slope = 2 * np.pi * amplitude * np.sin(4 * np.pi * (x + HALF_GAP))
        return np.sqrt(1 + slope ** 2)

    @classmethod
    def arc_length(cls, amplitude):
        value, _ = quad(cls._speed, -HALF_GAP, 0., args=(amplitude,),
                        epsabs=1e-14, epsrel=1e-14, limit=400)
        return value

    @classmethod
    def _solve_amplitude(cls, length):
        excess = length - HALF_GAP
        if excess < 1e-14:
            return 0.
        # arc length exceeds twice the amplitude
        return brentq(lambda a: cls.arc_length(a) - length,
                      0., length / 2, xtol=1e-15, rtol=BRENTQ_RTOL,
                      maxiter=200)

    def _build_table(self):
        t, w = leggauss(self._order)
        breaks = np.linspace(-HALF_GAP, 0., self._panels + 1)
        half = np.diff(breaks) / 2
        mid = (breaks[:-1] + breaks[1:]) / 2
        nodes = mid[:, None] + half[:, None] * t[None, :]
        panel = (half[:, None] * w[None, :] *
                 self._speed(nodes, self.amplitude)).sum(axis=1)
        self._breaks = breaks
        self._cumulative = np.concatenate([[0.], np.cumsum(panel)])
        self._gauss = (t, w)

    def _arc(self, x):
        """Arc length from the attachment point to abscissa x."""
        t, w = self._gauss
        k = np.clip(np.searchsorted(self._breaks, x, side='right') - 1,
                    0, self._panels - 1)
        start = self._breaks[k]
        half = (x - start) / 2
        nodes = (start + half)[..., None] + half[..., None] * t
        partial = (half[..., None] * w *
                   self._speed(nodes, self.amplitude)).sum(axis=-1)
        return self._cumulative[k] + partial

    def abscissa(self, s):
        """Invert the arc length by Newton iterations."""
        s = np.asarray(s, dtype=float)
        x = -HALF_GAP + s * HALF_GAP / self.length
        for _ in range(50):
            step = (self._arc(x) - s) / self._speed(x, self.amplitude)
            x = np.clip(x - step, -HALF_GAP, 0.)
            if np.all(np.abs(step) < 1e-15):
                break
        return x

    def point(self, s):
        x = self.abscissa(s)
        spec = self.spec
        y = (spec.y_attach + spec.bend_sign * self.amplitude *
             np.sin(2 * np.pi * (x + HALF_GAP)) ** 2)
        return np.stack([x, y], axis=-1)

    def tangent(self, s):
        x = self.abscissa(s)
        slope = (self.spec.bend_sign * 2 * np.pi * self.amplitude *
                 np.sin(4 * np.pi * (x + HALF_GAP)))
        norm = np.sqrt(1 + slope ** 2)
        return np.stack([1 / norm, slope / norm], axis=-1)


class ArcCenterline(Centerline):
    """Two circular arcs joined by a straight segment.

    Up to a length of π/4 two arcs of the same radius meet at the middle of
    the gap; beyond it the arcs are quarter circles of radius 1/4 joined by a
    vertical segment. The maximum curvature never exceeds 4, which keeps
    wide ligaments free of self-overlap.
    """

    def __init__(self, spec):
        super(ArcCenterline, self).__init__(spec)
        length = spec.length
        if length <= np.pi * ARC_RADIUS:
            # 2ρθ = length and 2ρ·sin θ = 1/2
            theta = brentq(lambda a: a - 2 * length * np.sin(a),
                           1e-9, np.pi / 2, xtol=1e-15, rtol=BRENTQ_RTOL)
            radius = 1 / (4 * np.sin(theta))
            straight = 0.
        else:
            theta = np.pi / 2
            radius = ARC_RADIUS
            straight = length - np.pi * ARC_RADIUS
        self.theta = theta
        self.radius = radius
        self.straight = straight
        self.curvature_max = 1 / radius

    def _pieces(self, s):
        s = np.asarray(s, dtype=float)
        first = self.radius * self.theta
        return s, first, first + self.straight

    def point(self, s):
        s, s1, s2 = self._pieces(s)
        r, theta, b = self.radius, self.theta, self.spec.bend_sign
        ya = self.spec.y_attach

        phi = np.clip(s, 0, s1) / r
        x = -HALF_GAP + r * np.sin(phi)
        y = ya + b * r * (1 - np.cos(phi))

        run = np.clip(s - s1, 0, self.straight)
        x = x + run * np.cos(theta)
        y = y + b * run * np.sin(theta)

        psi = np.clip(s - s2, 0, None) / r
        x = x + r * (np.sin(theta) - np.sin(theta - psi))
        y = y + b * r * (np.cos(theta - psi) - np.cos(theta))
        return np.stack([x, y], axis=-1)

    def tangent(self, s):
        s, s1, s2 = self._pieces(s)
        angle = np.where(s <= s1, s / self.radius,
                         np.where(s <= s2, self.theta,
                                  self.theta - (s - s2) / self.radius))
        b = self.spec.bend_sign
        return np.stack([np.cos(angle), b * np.sin(angle)], axis=-1)


CENTERLINES = MappingProxyType({
    'cosine': CosineArchCenterline,
    'arc': ArcCenterline,
})


def build_centerline(spec, band=BAND,
                     max_curvature_ratio=MAX_CURVATURE_RATIO):
    """Construct the centerline of a ligament.

    Parameters
    ----------
    spec : LigamentSpec
    band : tuple of float
        Admissible ordinates for the tube.
    max_curvature_ratio : float
        Upper bound on ε·κ_max/2 for the tube to stay free of self-overlap.

    Returns
    -------
    centerline : Centerline

    Raises
    ------
    GeometryError
        "Ligament does not fit" if the tube would self-overlap or leave
        the band.
    """
    centerline = CENTERLINES[spec.shape](spec)
    centerline._check_fit(band=band, max_curvature_ratio=max_curvature_ratio)
    return centerline


@dataclass(frozen=True)
class WaveguideGeometry(object):
    """Two channels joined by thin ligaments.

    Attributes
    ----------
    ligaments : tuple of LigamentSpec
        Empty for the straight duct.
    R : float
        Truncation abscissa, the DtN conditions being set on x = ±R.
    domain : str
        'full' or 'half'.
    """
    ligaments: tuple = ()
    R: float = 1.5
    domain: str = 'full'
    band: tuple = field(default=BAND)

    def __post_init__(self):
        object.__setattr__(self, 'ligaments', tuple(self.ligaments))
        if self.domain not in DOMAINS:
            msg = 'Unknown domain {!r}, expected one of {}'
            raise GeometryError(msg.format(self.domain, tuple(DOMAINS)))
        if self.R <= self.x0:
            msg = 'Truncation abscissa R = {} must exceed {}'
            raise GeometryError(msg.format(self.R, self.x0))

    @classmethod
    def straight(cls, R=1.5, domain='full'):
        """Straight duct without ligaments."""
        return cls(ligaments=(), R=R, domain=domain)

    @property
    def x0(self):
        """Distance from the symmetry axis to the channel ends.

        The channels of the straight duct meet on the axis.
        """
        return HALF_GAP if self.ligaments else 0.

    def half(self):
        return replace(self, domain='half')

    def full(self):
        return replace(self, domain='full')

    def centerlines(self):
        """Build and cross-check the ligament centerlines.

        Raises
        ------
        GeometryError
            If a tube leaves the channel strip at its attachment point or
            two tubes overlap.
        """
        curves = [build_centerline(spec, band=self.band)
                  for spec in self.ligaments]

        for spec in self.ligaments:
            low = spec.y_attach - spec.width / 2
            high = spec.y_attach + spec.width / 2
            if low <= 0 or high >= 1:
                msg = ('Ligament attached at y = {} with width {} does not '
                       'fit in the channel end')
                raise GeometryError(msg.format(spec.y_attach, spec.width))

        for i in range(len(curves)):
            for j in range(i + 1, len(curves)):
                gap = _curve_distance(curves[i], curves[j])
                needed = (self.ligaments[i].width +
                          self.ligaments[j].width) / 2
                if gap <= needed:
                    msg = ('Ligaments {} and {} overlap: centerline distance '
                           '{:.4g} is below {:.4g}')
                    raise GeometryError(msg.format(i, j, gap, needed))
        return curves

    def describe(self):
        """Plain metadata for reports."""
        return {
            'domain': self.domain,
            'R': self.R,
            'x0': self.x0,
            'ligaments': [spec.to_dict() for spec in self.ligaments],
        }


def _curve_distance(first, second, n=4000):
    tree = cKDTree(first.sample(n))
    distance, _ = tree.query(second.sample(n))
    return float(distance.min())
