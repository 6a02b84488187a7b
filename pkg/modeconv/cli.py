# coding=utf8
"""Command line front end.

    modeconv [-v] [--cache PATH] COMMAND [--config FILE] [--out DIR] ...

Commands: constants, design, solve, sweep, verify, mesh.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields
from types import MappingProxyType

import numpy as np

from . import __version__
from .constants import (ConstantsCache, ConstantsError, compute_constants,
                        flux_residual)
from .design import DesignError, DesignSpec, design, solve_attachments
from .export import write_json, write_landscape_csv, write_matrices_csv, \
    write_vtk
from .fem import AssemblyError, SolverError
from .geometry import SHAPES, GeometryError, LigamentSpec, WaveguideGeometry
from .mesh import MeshError, build_mesh
from .optimize import (OptimizeError, SweepGrid,
                       compare_to_prediction, peak_half_width, refine, sweep)
from .scattering import (DecompositionError, decompose, full_scattering,
                         half_scattering, verify_decomposition)

__all__ = ['RunConfig', 'DEFAULTS', 'main', 'ConfigError']

logger = logging.getLogger(__name__)

DEFAULTS = MappingProxyType({
    'omega': 1.5 * np.pi,
    'epsilon': 0.01,
    'n_modes': 15,
    'h': 0.05,
    'refine': 3,
    'R': 1.5,
    'm_minus': 1,
    'm_plus': 2,
    'n_layers': 3,
    'targets': 'conversion',
    'shape': 'cosine',
})

# command line names of the target conventions
TARGET_ALIASES = MappingProxyType({
    'eq13': 'conversion',
    'eq61': 'reflection',
    'conversion': 'conversion',
    'reflection': 'reflection',
})

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4

CONFIG_ERRORS = (DesignError, GeometryError, DecompositionError,
                 OptimizeError)
# numerical failures inside numpy and scipy
SOLVER_ERRORS = (SolverError, MeshError, AssemblyError, ConstantsError,
                 np.linalg.LinAlgError, ValueError, ArithmeticError)

# audit tolerances
ENERGY_TOL = 1e-3
RECIPROCITY_TOL = 1e-3
DECOMPOSITION_TOL = 1e-3


class ConfigError(Exception):
    """Class for run configuration errors."""
    pass


@dataclass
class RunConfig(object):
    """Parameters of a run.

    `ligaments` is 'auto' (use the design recipe) or a list of LigamentSpec
    dictionaries; an empty list is the straight duct.
    """
    omega: float = DEFAULTS['omega']
    epsilon: float = DEFAULTS['epsilon']
    n_modes: int = DEFAULTS['n_modes']
    h: float = DEFAULTS['h']
    refine: int = DEFAULTS['refine']
    R: float = DEFAULTS['R']
    n_layers: int = DEFAULTS['n_layers']
    m_minus: int = DEFAULTS['m_minus']
    m_plus: int = DEFAULTS['m_plus']
    ligaments: object = 'auto'
    abc: str = None
    out: str = '.'
    targets: str = DEFAULTS['targets']
    shape: str = DEFAULTS['shape']
    grid: str = None
    workers: int = None
    override_range: bool = False
    half_mesh_h: float = None

    @classmethod
    def from_json(cls, path):
        with open(path) as f:
            try:
                data = json.load(f)
            except ValueError as err:
                msg = 'Config file {} is not valid JSON: {}'
                raise ConfigError(msg.format(path, err))
        return cls.from_dict(data)

    @classmethod
    def from_dict(cls, data):
        known = {item.name for item in fields(cls)}
        unknown = set(data) - known
        if unknown:
            msg = 'Unknown config fields: {}'
            raise ConfigError(msg.format(', '.join(sorted(unknown))))
        return cls(**data)

    def update(self, **kwargs):
        for key, value in kwargs.items():
            if value is not None:
                setattr(self, key, value)
        return self

    def validate(self):
        """Check ranges; raise ConfigError."""
        positive = ('omega', 'n_modes', 'h', 'R', 'n_layers')
        for name in positive:
            if not getattr(self, name) > 0:
                msg = '{} must be positive, got {}'
                raise ConfigError(msg.format(name, getattr(self, name)))
        if self.epsilon < 0:
            msg = 'epsilon must be non-negative, got {}'
            raise ConfigError(msg.format(self.epsilon))
        if self.refine < 0:
            msg = 'refine must be non-negative, got {}'
            raise ConfigError(msg.format(self.refine))
        if not self.override_range and not np.pi < self.omega < 2 * np.pi:
            msg = ('omega = {:.6f} is outside (pi, 2pi); use --override-range '
                   'to run anyway')
            raise ConfigError(msg.format(self.omega))
        if self.targets not in TARGET_ALIASES:
            msg = 'Unknown targets {!r}, expected one of {}'
            raise ConfigError(msg.format(self.targets, tuple(TARGET_ALIASES)))
        self.targets = TARGET_ALIASES[self.targets]
        if self.abc not in (None, 'neumann', 'dirichlet'):
            msg = "abc must be 'neumann' or 'dirichlet', got {!r}"
            raise ConfigError(msg.format(self.abc))
        if self.shape not in SHAPES:
            msg = 'Unknown centerline family {!r}, expected one of {}'
            raise ConfigError(msg.format(self.shape, SHAPES))
        if self.ligaments != 'auto' and not isinstance(self.ligaments, list):
            raise ConfigError("ligaments must be 'auto' or a list")
        if self.half_mesh_h is not None and self.half_mesh_h <= 0:
            raise ConfigError('half_mesh_h must be positive')
        return self

    @property
    def mesh_params(self):
        return {'h': self.h, 'junction_refine': self.refine,
                'n_layers': self.n_layers, 'n_terms': self.n_modes}

    def to_dict(self):
        return asdict(self)


def _path(config, name):
    os.makedirs(config.out, exist_ok=True)
    return os.path.join(config.out, name)


def _cache(args, config):
    path = args.cache or _path(config, 'constants_cache.json')
    return ConstantsCache(path)


def _gamma_params(config):
    return {'h': config.h, 'levels': config.refine, 'R': config.R,
            'n_terms': config.n_modes}


def _constants(config, cache):
    y_minus, y_plus = solve_attachments(config.omega)
    return compute_constants(config.omega, (y_minus, y_plus), cache=cache,
                             **_gamma_params(config))


def _reusable(spec, config):
    """Whether a stored design matches the run and its constants."""
    if (spec.omega, spec.epsilon, spec.m_minus, spec.m_plus) != \
            (config.omega, config.epsilon, config.m_minus, config.m_plus):
        return False
    if config.epsilon == 0:
        return not spec.constants_used
    provenance = spec.constants_used.get('provenance', {})
    return provenance.get('gamma') == _gamma_params(config)


def _design(config, cache):
    path = os.path.join(config.out, 'design.json')
    if os.path.exists(path):
        spec = DesignSpec.from_json(path)
        if _reusable(spec, config):
            logger.info('Reusing %s', path)
            return spec
    constants = None
    if config.epsilon > 0:
        constants = _constants(config, cache)
    spec = design(config.omega, config.epsilon, config.m_minus,
                  config.m_plus, constants=constants)
    spec.to_json(_path(config, 'design.json'))
    return spec


def _geometry(config, cache):
    if config.ligaments == 'auto':
        if config.epsilon <= 0:
            raise ConfigError('Solving needs a positive epsilon')
        return _design(config, cache).to_geometry(R=config.R,
                                                  shape=config.shape)
    try:
        ligaments = [LigamentSpec(**item) for item in config.ligaments]
    except TypeError as err:
        raise ConfigError('Invalid ligament description: {}'.format(err))
    return WaveguideGeometry(ligaments=tuple(ligaments), R=config.R)


def cmd_constants(config, cache):
    """Compute C_Xi and Gamma at the attachment ordinates."""
    constants = _constants(config, cache)
    report = constants.to_dict()
    report['flux_residuals'] = {}
    print('C_Xi = {:.6f}'.format(constants.c_xi))
    for y, gamma in sorted(constants.gamma.items()):
        residual = flux_residual(y, config.omega, gamma)
        report['flux_residuals'][str(y)] = residual
        print('Gamma({:.6f}) = {:.6f}{:+.6f}j  Im(omega Gamma) = {:.6f}  '
              'residual {:.1e}'.format(y, gamma.real, gamma.imag,
                                       (config.omega * gamma).imag,
                                       residual))
    write_json(_path(config, 'constants.json'), report)
    return EXIT_OK


def cmd_design(config, cache):
    """Apply the design recipe."""
    spec = _design(config, cache)
    critical = spec.critical_lengths
    print('y- = {:.6f}  y+ = {:.6f}'.format(spec.y_minus, spec.y_plus))
    print('l- = {:.6f} (critical {:.6f})  l+ = {:.6f} (critical {:.6f})'
          .format(spec.ell_minus_eps, critical[0], spec.ell_plus_eps,
                  critical[1]))
    return EXIT_OK


def _print_matrices(matrices):
    for name, value in matrices.entries():
        print('{} = {:+.6f}{:+.6f}j'.format(name, value.real, value.imag))
    rows = matrices.energy_rows()
    passed = bool(np.all(np.abs(rows - 1) <= ENERGY_TOL))
    print('energy rows {}: {}'.format(
        ', '.join('{:.6f}'.format(row) for row in rows),
        'pass' if passed else 'FAIL'))
    return passed


def cmd_solve(config, cache):
    """Solve the full problem, or a half problem with --abc."""
    geometry = _geometry(config, cache)
    if config.abc is None:
        matrices, solution = full_scattering(
            geometry, config.omega, keep_solution=True, **config.mesh_params)
    else:
        matrices, solution = half_scattering(
            geometry, config.omega, config.abc, keep_solution=True,
            **config.mesh_params)
    passed = _print_matrices(matrices)
    defect = matrices.reciprocity_defect()
    symmetric = defect <= RECIPROCITY_TOL
    print('reciprocity defect {:.2e}: {}'.format(
        defect, 'pass' if symmetric else 'FAIL'))

    write_matrices_csv(_path(config, 'matrices.csv'), [matrices])
    write_vtk(_path(config, 'field.vtk'), solution.space.mesh,
              {'u1': solution.nodal(0), 'u2': solution.nodal(1)},
              title='modeconv {} field'.format(matrices.kind))
    report = matrices.to_dict()
    report['energy_passed'] = passed
    report['reciprocity_defect'] = defect
    report['geometry'] = geometry.describe()
    write_json(_path(config, 'report.json'), report)
    return EXIT_OK if passed and symmetric else EXIT_INVARIANT


def cmd_sweep(config, cache, refine_argmin=True):
    """Sweep the ligament lengths and refine the minimum."""
    spec = _design(config, cache)
    kwargs = {'R': config.R, 'shape': config.shape}
    if config.grid:
        grid = SweepGrid.from_text(spec, config.grid, **kwargs)
    else:
        grid = SweepGrid.around(spec, **kwargs)
    if not grid.covers(spec.ell_minus_eps, spec.ell_plus_eps):
        logger.warning('The grid does not cover the corrected lengths')

    landscape = sweep(grid, targets=config.targets, workers=config.workers,
                      **config.mesh_params)
    write_landscape_csv(_path(config, 'landscape.csv'), landscape)
    best = landscape.argmin()
    report = landscape.to_dict()
    if refine_argmin:
        best = refine(grid, best, targets=config.targets,
                      **config.mesh_params)
        report['refined'] = {'ell_minus': best.ell_minus,
                             'ell_plus': best.ell_plus, 'J': best.J}
    report['prediction'] = compare_to_prediction(best, spec)
    report['peak_half_width'] = list(peak_half_width(landscape))
    write_json(_path(config, 'argmin.json'), report)
    print('argmin l- = {:.6f}  l+ = {:.6f}  J = {:.4f}'.format(
        best.ell_minus, best.ell_plus, best.J))
    return EXIT_OK


def cmd_verify(config, cache):
    """Check energy, reciprocity and the symmetry decomposition."""
    geometry = _geometry(config, cache)
    if config.half_mesh_h is None:
        runs, report = decompose(geometry, config.omega,
                                 workers=config.workers,
                                 **config.mesh_params)
    else:
        runs = {'full': full_scattering(geometry, config.omega,
                                        **config.mesh_params)}
        params = dict(config.mesh_params, h=config.half_mesh_h)
        for abc in ('neumann', 'dirichlet'):
            runs[abc] = half_scattering(geometry, config.omega, abc,
                                        **params)
        report = verify_decomposition(runs['full'], runs['full'],
                                      runs['neumann'], runs['dirichlet'])

    checks = {}
    for kind, matrices in runs.items():
        checks['energy_' + kind] = matrices.energy_defect()
    checks['reciprocity_full'] = runs['full'].reciprocity_defect()
    checks['decomposition_R'] = report.residual_R
    checks['decomposition_T'] = report.residual_T
    limits = {'energy': ENERGY_TOL, 'reciprocity': RECIPROCITY_TOL,
              'decomposition': DECOMPOSITION_TOL}

    failed = []
    for name, value in checks.items():
        limit = limits[name.split('_')[0]]
        status = 'pass' if value <= limit else 'FAIL'
        if status == 'FAIL':
            failed.append(name)
        print('{:<20s} {:.2e} (<= {:.0e}) {}'.format(name, value, limit,
                                                      status))
    write_json(_path(config, 'verify.json'),
               {'checks': checks, 'failed': failed,
                'matrices': {k: v.to_dict() for k, v in runs.items()}})
    return EXIT_INVARIANT if failed else EXIT_OK


def cmd_mesh(config, cache):
    """Build and export the mesh."""
    geometry = _geometry(config, cache)
    mesh = build_mesh(geometry, h=config.h, junction_refine=config.refine,
                      n_layers=config.n_layers)
    write_vtk(_path(config, 'mesh.vtk'), mesh, title='modeconv mesh')
    print('{} nodes, {} triangles, min quality {:.3f}'.format(
        mesh.n_nodes, mesh.n_triangles, mesh.quality().min()))
    for name, count in mesh.tags().items():
        print('{:<18s} {} edges'.format(name, count))
    return EXIT_OK


COMMANDS = MappingProxyType({
    'constants': cmd_constants,
    'design': cmd_design,
    'solve': cmd_solve,
    'sweep': cmd_sweep,
    'verify': cmd_verify,
    'mesh': cmd_mesh,
})


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON run configuration')
    common.add_argument('--out', help='output directory')
    common.add_argument('--omega', type=float)
    common.add_argument('--epsilon', type=float)
    common.add_argument('--h', type=float, help='mesh size')
    common.add_argument('--workers', type=int,
                        help='number of worker processes')
    common.add_argument('--targets', choices=sorted(TARGET_ALIASES))
    common.add_argument('--abc', choices=('neumann', 'dirichlet'),
                        help='solve a half problem')
    common.add_argument('--grid', help='sweep grid a:b:n,c:d:m')
    common.add_argument('--override-range', action='store_true',
                        default=None,
                        help='accept omega outside (pi, 2pi)')

    parser = argparse.ArgumentParser(
        prog='modeconv',
        description='Thin-ligament waveguide mode converter toolkit.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s ' + __version__)
    parser.add_argument('-v', '--verbose', action='count', default=0)
    parser.add_argument('--cache', help='constants cache file')
    subparsers = parser.add_subparsers(dest='command')
    subparsers.required = True
    for name, func in COMMANDS.items():
        subparsers.add_parser(name, parents=[common],
                              help=func.__doc__)
    return parser


def load_config(args):
    """Merge the config file and the command line flags."""
    config = RunConfig.from_json(args.config) if args.config else RunConfig()
    config.update(out=args.out, omega=args.omega, epsilon=args.epsilon,
                  h=args.h, workers=args.workers, targets=args.targets,
                  abc=args.abc, grid=args.grid,
                  override_range=args.override_range)
    return config.validate()


def main(argv=None):
    args = _parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[
        min(args.verbose, 2)]
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s '
                               '%(message)s')
    try:
        config = load_config(args)
        cache = _cache(args, config)
        return COMMANDS[args.command](config, cache)
    except (ConfigError,) + CONFIG_ERRORS as err:
        print('configuration error: {}'.format(err), file=sys.stderr)
        return EXIT_CONFIG
    except SOLVER_ERRORS as err:
        print('solver failure: {}'.format(err), file=sys.stderr)
        return EXIT_SOLVER


if __name__ == '__main__':
    sys.exit(main())
