# coding=utf8
"""Cost landscape of the half-problem reflection matrices over the ligament
lengths, its minimum and the comparison with the corrected lengths."""
import logging
from dataclasses import dataclass, field
from multiprocessing import Pool
from types import MappingProxyType

import numpy as np
from scipy.optimize import minimize_scalar

from .fem import AssemblyError, SolverError
from .geometry import GeometryError
from .mesh import MeshError
from .scattering import half_scattering, max_norm

__all__ = [
    'SweepGrid',
    'SweepPoint',
    'Landscape',
    'TARGETS',
    'cost',
    'cost_terms',
    'evaluate',
    'sweep',
    'refine',
    'compare_to_prediction',
    'peak_half_width',
    'OptimizeError',
]

logger = logging.getLogger(__name__)

# target half-problem matrices
TARGETS = MappingProxyType({
    # mode conversion, R = 0 and T = (0, 1; 1, 0)
    'conversion': MappingProxyType({
        'N': np.array([[0, 1], [1, 0]], dtype=complex),
        'D': np.array([[0, -1], [-1, 0]], dtype=complex),
    }),
    # R_N = I, R_D = -I
    'reflection': MappingProxyType({
        'N': np.eye(2, dtype=complex),
        'D': -np.eye(2, dtype=complex),
    }),
})

COST_FLOOR = 1e-300
GRID_POINTS = 41
GRID_HALF_WIDTH = 5  # in units of ε
LENGTH_TOL = 1e-5

# point failures excluded from landscapes
POINT_ERRORS = (SolverError, MeshError, GeometryError, AssemblyError)


class OptimizeError(Exception):
    """Class for sweep and refinement errors."""
    pass


def _targets(name):
    try:
        return TARGETS[name]
    except KeyError:
        msg = 'Unknown target convention {!r}, expected one of {}'
        raise OptimizeError(msg.format(name, tuple(TARGETS)))


def cost_terms(R_N, R_D, targets='conversion'):
    """Return the max-modulus distances of R_N and R_D to the targets."""
    target = _targets(targets)
    return (max_norm(np.asarray(R_N) - target['N']),
            max_norm(np.asarray(R_D) - target['D']))


def cost(R_N, R_D, targets='conversion'):
    """J = ln(|R_N - R†_N| + |R_D - R†_D|), the distance floored at 1e-300.

    More negative is better.
    """
    return float(np.log(max(sum(cost_terms(R_N, R_D, targets)),
                            COST_FLOOR)))


def _parse_range(text):
    try:
        start, stop, count = text.split(':')
        return float(start), float(stop), int(count)
    except ValueError:
        msg = 'Cannot parse range {!r}, expected start:stop:count'
        raise OptimizeError(msg.format(text))


@dataclass(frozen=True)
class SweepGrid(object):
    """Grid of (ℓ₋, ℓ₊) at fixed ε, ω and attachment ordinates.

    Attributes
    ----------
    spec : modeconv.design.DesignSpec
        Supplies ε, ω, y± and the predicted lengths.
    minus, plus : tuple
        (start, stop, count) for ℓ₋ and ℓ₊.
    R : float
    shape : str
        Centerline family.
    """
    spec: object
    minus: tuple
    plus: tuple
    R: float = 1.5
    shape: str = 'cosine'

    def __post_init__(self):
        for start, stop, count in (self.minus, self.plus):
            if count < 1 or stop < start or (count > 1 and stop == start):
                msg = 'Invalid grid range {}:{}:{}'
                raise OptimizeError(msg.format(start, stop, count))

    @classmethod
    def around(cls, spec, half_width=None, n=GRID_POINTS, **kwargs):
        """n x n grid of ±half_width (5ε by default) around the corrected
        lengths."""
        half_width = GRID_HALF_WIDTH * spec.epsilon if half_width is None \
            else half_width
        minus = (spec.ell_minus_eps - half_width,
                 spec.ell_minus_eps + half_width, n)
        plus = (spec.ell_plus_eps - half_width,
                spec.ell_plus_eps + half_width, n)
        return cls(spec, minus, plus, **kwargs)

    @classmethod
    def from_text(cls, spec, text, **kwargs):
        """Parse 'a:b:n,c:d:m'."""
        try:
            first, second = text.split(',')
        except ValueError:
            msg = 'Cannot parse grid {!r}, expected a:b:n,c:d:m'
            raise OptimizeError(msg.format(text))
        return cls(spec, _parse_range(first), _parse_range(second), **kwargs)

    @property
    def ell_minus(self):
        return np.linspace(*self.minus)

    @property
    def ell_plus(self):
        return np.linspace(*self.plus)

    @property
    def shape2d(self):
        return self.minus[2], self.plus[2]

    @property
    def steps(self):
        return tuple((stop - start) / max(count - 1, 1)
                     for start, stop, count in (self.minus, self.plus))

    def covers(self, ell_minus, ell_plus):
        return (self.minus[0] <= ell_minus <= self.minus[1] and
                self.plus[0] <= ell_plus <= self.plus[1])

    def geometry(self, ell_minus, ell_plus):
        return self.spec.to_geometry(R=self.R, shape=self.shape,
                                     domain='half', ell_minus=ell_minus,
                                     ell_plus=ell_plus)

    def indices(self):
        n, m = self.shape2d
        for i in range(n):
            for j in range(m):
                yield i, j


@dataclass
class SweepPoint(object):
    index: tuple
    ell_minus: float
    ell_plus: float
    J: float = np.nan
    valid: bool = False
    R_N: np.ndarray = None
    R_D: np.ndarray = None
    error: str = ''


def evaluate(task):
    """Solve both half problems at one grid point.

    task is (index, grid, ell_minus, ell_plus, params, targets); solver
    failures give an invalid point.
    """
    index, grid, ell_minus, ell_plus, params, targets = task
    point = SweepPoint(index, float(ell_minus), float(ell_plus))
    try:
        geometry = grid.geometry(ell_minus, ell_plus)
        R_N = half_scattering(geometry, grid.spec.omega, 'neumann',
                              **params).R
        R_D = half_scattering(geometry, grid.spec.omega, 'dirichlet',
                              **params).R
    except POINT_ERRORS as err:
        logger.warning('Sweep point %s (%.6f, %.6f) failed: %s',
                       index, ell_minus, ell_plus, err)
        point.error = str(err)
        return point
    point.R_N, point.R_D = R_N, R_D
    point.J = cost(R_N, R_D, targets)
    point.valid = True
    logger.debug('Sweep point %s (%.6f, %.6f): J = %.4f',
                 index, ell_minus, ell_plus, point.J)
    return point


@dataclass
class Landscape(object):
    """Sweep results ordered by grid index."""
    grid: SweepGrid
    points: list
    targets: str = 'conversion'
    metadata: dict = field(default_factory=dict)

    @property
    def values(self):
        """J as an (n, m) array, NaN at invalid points."""
        J = np.full(self.grid.shape2d, np.nan)
        for point in self.points:
            J[point.index] = point.J
        return J

    @property
    def invalid(self):
        return [point for point in self.points if not point.valid]

    def argmin(self):
        """Return the valid point of smallest J."""
        valid = [point for point in self.points if point.valid]
        if not valid:
            raise OptimizeError('No valid point in the landscape')
        return min(valid, key=lambda point: point.J)

    def to_dict(self):
        best = self.argmin()
        return {
            'ell_minus': best.ell_minus,
            'ell_plus': best.ell_plus,
            'J': best.J,
            'targets': self.targets,
            'norm': 'entrywise max modulus',
            'grid': {'minus': list(self.grid.minus),
                     'plus': list(self.grid.plus)},
            'invalid': [list(point.index) for point in self.invalid],
            'metadata': self.metadata,
        }


def _mesh_params(h, junction_refine, n_layers, n_terms):
    return {'h': h, 'junction_refine': junction_refine,
            'n_layers': n_layers, 'n_terms': n_terms}


def sweep(grid, h=0.05, junction_refine=3, n_layers=3, n_terms=15,
          targets='conversion', workers=None):
    """Evaluate J on every grid point.

    Parameters
    ----------
    grid : SweepGrid
    h, junction_refine, n_layers, n_terms : mesh and DtN parameters.
    targets : str
        Key of TARGETS.
    workers : int, optional
        Number of processes; sequential if None.

    Returns
    -------
    landscape : Landscape
    """
    _targets(targets)
    params = _mesh_params(h, junction_refine, n_layers, n_terms)
    minus, plus = grid.ell_minus, grid.ell_plus
    tasks = [((i, j), grid, minus[i], plus[j], params, targets)
             for i, j in grid.indices()]
    logger.info('Sweeping %d points', len(tasks))
    if workers:
        with Pool(workers) as pool:
            points = pool.map(evaluate, tasks)
    else:
        points = [evaluate(task) for task in tasks]

    landscape = Landscape(grid, points, targets=targets, metadata=params)
    if landscape.invalid:
        logger.warning('%d of %d sweep points are invalid',
                       len(landscape.invalid), len(points))
    return landscape


def refine(grid, start, h=0.05, junction_refine=3, n_layers=3, n_terms=15,
           targets='conversion', tol=LENGTH_TOL, max_cycles=3):
    """Alternate golden-section searches along ℓ₋ and ℓ₊.

    The brackets are one grid step wide on each side of the current point.

    Parameters
    ----------
    grid : SweepGrid
    start : SweepPoint or (float, float)
    tol : float
        Length tolerance.
    max_cycles : int
        Upper bound on (ℓ₋, ℓ₊) search pairs.

    Returns
    -------
    point : SweepPoint
    """
    params = _mesh_params(h, junction_refine, n_layers, n_terms)
    if isinstance(start, SweepPoint):
        start = (start.ell_minus, start.ell_plus)
    current = [float(start[0]), float(start[1])]
    steps = grid.steps

    def objective(axis):
        def func(value):
            lengths = list(current)
            lengths[axis] = value
            point = evaluate((None, grid, lengths[0], lengths[1], params,
                              targets))
            # invalid points must not attract the search
            return point.J if point.valid else np.inf
        return func

    for cycle in range(max_cycles):
        previous = list(current)
        for axis in (0, 1):
            delta = steps[axis]
            x = current[axis]
            try:
                result = minimize_scalar(
                    objective(axis), bracket=(x - delta, x, x + delta),
                    method='golden', tol=tol)
            except ValueError:
                result = minimize_scalar(
                    objective(axis), bracket=(x - delta, x + delta),
                    method='golden', tol=tol)
            current[axis] = float(result.x)
        moved = max(abs(a - b) for a, b in zip(current, previous))
        logger.info('Refinement cycle %d: (%.6f, %.6f), moved %.1e',
                    cycle + 1, current[0], current[1], moved)
        if moved < tol:
            break

    return evaluate((None, grid, current[0], current[1], params, targets))


def compare_to_prediction(argmin, spec):
    """Compare observed length deficits ℓ_crit - ℓ* with the predicted
    ε-corrections.

    Parameters
    ----------
    argmin : SweepPoint or (float, float)
    spec : modeconv.design.DesignSpec

    Returns
    -------
    report : dict
        Per ligament: critical, optimal and predicted lengths, observed and
        predicted deficits, their ratio and |ℓ* - ℓ^ε|/ε.
    """
    if isinstance(argmin, SweepPoint):
        argmin = (argmin.ell_minus, argmin.ell_plus)
    report = {'epsilon': spec.epsilon, 'omega': spec.omega}
    predicted = (spec.ell_minus_eps, spec.ell_plus_eps)
    for name, critical, best, expected in zip(
            ('minus', 'plus'), spec.critical_lengths, argmin, predicted):
        observed = critical - best
        deficit = critical - expected
        report[name] = {
            'critical': critical,
            'optimal': best,
            'predicted': expected,
            'observed_deficit': observed,
            'predicted_deficit': deficit,
            'ratio': observed / deficit if deficit else np.nan,
            'offset': abs(best - expected) / spec.epsilon,
        }
    return report


def peak_half_width(landscape):
    """Widths along ℓ₋ and ℓ₊, through the minimum, of the contiguous
    region where J lies below the mid level (J_min + J_max)/2."""
    J = landscape.values
    if np.all(np.isnan(J)):
        raise OptimizeError('No valid point in the landscape')
    level = (np.nanmin(J) + np.nanmax(J)) / 2
    i, j = np.unravel_index(np.nanargmin(J), J.shape)
    steps = landscape.grid.steps

    widths = []
    for line, center, step in ((J[:, j], i, steps[0]),
                               (J[i, :], j, steps[1])):
        below = np.nan_to_num(line, nan=np.inf) <= level
        low = center
        while low > 0 and below[low - 1]:
            low -= 1
        high = center
        while high < len(line) - 1 and below[high + 1]:
            high += 1
        widths.append((high - low) * step)
    return tuple(widths)
