# coding=utf8
"""Scattering matrices of the full and half problems and the symmetry
decomposition R = (R_N + R_D)/2, T = (R_N - R_D)/2."""
import logging
from dataclasses import dataclass, field
from multiprocessing import Pool

import numpy as np

from .fem import DtnOperator, FemSolution, FemSpace, assemble, solve
from .mesh import TRUNCATION_LEFT, TRUNCATION_RIGHT, build_mesh
from .modes import ModeBasis, extract_coefficients

__all__ = [
    'ScatteringMatrices',
    'DecompositionReport',
    'full_scattering',
    'half_scattering',
    'verify_decomposition',
    'decompose',
    'ScatteringError',
    'DecompositionError',
]

logger = logging.getLogger(__name__)

KINDS = ('full', 'neumann', 'dirichlet')
ABC_ALIASES = {
    'n': 'neumann', 'neumann': 'neumann',
    'd': 'dirichlet', 'dirichlet': 'dirichlet',
}
# metadata that must agree between runs combined by the decomposition
COMPARED = ('omega', 'ligaments', 'R', 'h', 'levels', 'n_layers', 'n_terms',
            'signature')


class ScatteringError(Exception):
    """Class for scattering computation errors."""
    pass


class DecompositionError(ScatteringError):
    pass


def max_norm(matrix):
    """Entrywise max modulus."""
    return float(np.max(np.abs(matrix)))


@dataclass
class ScatteringMatrices(object):
    """2x2 reflection (and transmission) matrices.

    Attributes
    ----------
    kind : str
        'full', 'neumann' or 'dirichlet'.
    R : numpy.ndarray, shape (2, 2)
        Reflection matrix, row i for incident mode i.
    T : numpy.ndarray or None
        Transmission matrix of full problems.
    metadata : dict
    """
    kind: str
    R: np.ndarray
    T: np.ndarray = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            msg = 'Unknown scattering problem: {!r}'
            raise ScatteringError(msg.format(self.kind))
        self.R = np.asarray(self.R, dtype=complex)
        if self.T is not None:
            self.T = np.asarray(self.T, dtype=complex)

    def energy_rows(self):
        """Σ_j |r_ij|² (+ |t_ij|²) for each incident mode i."""
        rows = np.sum(np.abs(self.R) ** 2, axis=1)
        if self.T is not None:
            rows = rows + np.sum(np.abs(self.T) ** 2, axis=1)
        return rows

    def energy_defect(self):
        return float(np.max(np.abs(self.energy_rows() - 1)))

    def reciprocity_defect(self):
        defect = abs(self.R[0, 1] - self.R[1, 0])
        if self.T is not None:
            defect = max(defect, abs(self.T[0, 1] - self.T[1, 0]))
        return float(defect)

    def entries(self):
        """Yield (name, value) for every matrix entry."""
        names = ('R',) if self.T is None else ('R', 'T')
        for name in names:
            matrix = getattr(self, name)
            for i in range(2):
                for j in range(2):
                    yield '{}{}{}'.format(name.lower(), i + 1, j + 1), \
                        matrix[i, j]

    def to_dict(self):
        out = {'kind': self.kind}
        for name, value in self.entries():
            out[name] = [value.real, value.imag]
        out['energy_rows'] = self.energy_rows().tolist()
        out['metadata'] = self.metadata
        return out


@dataclass
class DecompositionReport(object):
    """Residuals of the symmetry decomposition identity."""
    residual_R: float
    residual_T: float
    R: np.ndarray
    T: np.ndarray

    def passed(self, tol):
        return max(self.residual_R, self.residual_T) <= tol

    def to_dict(self):
        return {
            'residual_R': self.residual_R,
            'residual_T': self.residual_T,
            'norm': 'entrywise max modulus',
        }


def _mesh_parameters(h, junction_refine, n_layers):
    return {'h': h, 'junction_refine': junction_refine, 'n_layers': n_layers}


def _solve(geometry, omega, abc, h, junction_refine, n_layers, n_terms,
           mesh=None):
    if mesh is None:
        mesh = build_mesh(geometry, h=h, junction_refine=junction_refine,
                          n_layers=n_layers)
    space = FemSpace(mesh)
    operators = [DtnOperator(space, TRUNCATION_LEFT, omega, n_terms)]
    if geometry.domain == 'full':
        operators.append(
            DtnOperator(space, TRUNCATION_RIGHT, omega, n_terms))
    system = assemble(space, omega, dtn=operators, abc=abc,
                      incident=(1, 2), x0=geometry.x0)
    values = solve(system)
    metadata = {
        'omega': omega,
        'ligaments': [spec.to_dict() for spec in geometry.ligaments],
        'R': geometry.R,
        'x0': geometry.x0,
        'h': mesh.info['h'],
        'levels': mesh.info['levels'],
        'n_layers': mesh.info['n_layers'],
        'n_terms': n_terms,
        'signature': list(mesh.signature()),
        'n_dofs': space.n_dofs,
        'residual': float(np.max(system.residuals)),
    }
    return FemSolution(space, values), metadata


def full_scattering(geometry, omega, h=0.05, junction_refine=3, n_layers=3,
                    n_terms=15, mesh=None, keep_solution=False):
    """Solve the full problem for both incident modes.

    Parameters
    ----------
    geometry : modeconv.geometry.WaveguideGeometry
    omega : float
    h, junction_refine, n_layers : mesh parameters, see build_mesh.
    n_terms : int
        DtN terms on both truncation sections.
    mesh : modeconv.mesh.Mesh, optional
        Prebuilt full mesh.
    keep_solution : bool
        Also return the FemSolution.

    Returns
    -------
    matrices : ScatteringMatrices
        R from the left section, T from the right one; metadata holds the
        max |Re u| and |Im u| of the mode-1 field in every ligament.
    """
    geometry = geometry.full()
    solution, metadata = _solve(geometry, omega, 'none', h, junction_refine,
                                n_layers, n_terms, mesh=mesh)
    basis = ModeBasis(omega, n_terms)

    R = np.zeros((2, 2), dtype=complex)
    T = np.zeros((2, 2), dtype=complex)
    contamination = 0.
    for k, mode in enumerate((1, 2)):
        left = extract_coefficients(solution.trace(TRUNCATION_LEFT, k),
                                    basis, incident=mode, x0=geometry.x0)
        right = extract_coefficients(solution.trace(TRUNCATION_RIGHT, k),
                                     basis, x0=geometry.x0, side='right')
        R[k] = left.values[:2]
        T[k] = right.values[:2]
        contamination = max(contamination, left.contamination,
                            right.contamination)

    extrema = []
    for region in range(1, len(geometry.ligaments) + 1):
        real, imag = solution.region_extrema(region, 0)
        extrema.append({'max_abs_re': real, 'max_abs_im': imag})
    metadata['ligament_fields'] = extrema
    metadata['contamination'] = contamination

    matrices = ScatteringMatrices('full', R, T, metadata=metadata)
    logger.info('Full problem: energy defect %.2e, reciprocity %.2e',
                matrices.energy_defect(), matrices.reciprocity_defect())
    if keep_solution:
        return matrices, solution
    return matrices


def half_scattering(geometry, omega, abc, h=0.05, junction_refine=3,
                    n_layers=3, n_terms=15, mesh=None, keep_solution=False):
    """Solve a half problem with a Neumann or Dirichlet condition on the
    caps and return its reflection matrix (R_N or R_D)."""
    try:
        abc = ABC_ALIASES[str(abc).lower()]
    except KeyError:
        msg = 'Half problems need a Neumann or Dirichlet condition, got {!r}'
        raise ScatteringError(msg.format(abc))

    geometry = geometry.half()
    solution, metadata = _solve(geometry, omega, abc, h, junction_refine,
                                n_layers, n_terms, mesh=mesh)
    basis = ModeBasis(omega, n_terms)

    R = np.zeros((2, 2), dtype=complex)
    contamination = 0.
    for k, mode in enumerate((1, 2)):
        left = extract_coefficients(solution.trace(TRUNCATION_LEFT, k),
                                    basis, incident=mode, x0=geometry.x0)
        R[k] = left.values[:2]
        contamination = max(contamination, left.contamination)
    metadata['contamination'] = contamination

    matrices = ScatteringMatrices(abc, R, metadata=metadata)
    logger.info('Half problem (%s): energy defect %.2e', abc,
                matrices.energy_defect())
    if keep_solution:
        return matrices, solution
    return matrices


def _matrix(value, name):
    if isinstance(value, ScatteringMatrices):
        matrix = value.T if name == 'T' else value.R
    else:
        matrix = value
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2, 2):
        msg = '{} must be a 2x2 matrix, got shape {}'
        raise DecompositionError(msg.format(name, matrix.shape))
    return matrix


def _check_comparable(runs):
    runs = [run for run in runs if isinstance(run, ScatteringMatrices)]
    for run in runs[1:]:
        for key in COMPARED:
            if run.metadata.get(key) != runs[0].metadata.get(key):
                msg = 'incomparable runs: {} differs ({!r} != {!r})'
                raise DecompositionError(msg.format(
                    key, run.metadata.get(key), runs[0].metadata.get(key)))


def verify_decomposition(R, T, R_N, R_D):
    """Check R = (R_N + R_D)/2 and T = (R_N - R_D)/2.

    Arguments are 2x2 matrices or ScatteringMatrices (whose R, or T for the
    second argument, is used); the metadata of all ScatteringMatrices given
    must describe the same geometry and mirror-consistent meshes.

    Returns
    -------
    report : DecompositionReport

    Raises
    ------
    DecompositionError
        "incomparable runs" on a metadata mismatch.
    """
    _check_comparable([R, T, R_N, R_D])
    r, t = _matrix(R, 'R'), _matrix(T, 'T')
    r_n, r_d = _matrix(R_N, 'R_N'), _matrix(R_D, 'R_D')
    predicted_r = (r_n + r_d) / 2
    predicted_t = (r_n - r_d) / 2
    return DecompositionReport(
        residual_R=max_norm(r - predicted_r),
        residual_T=max_norm(t - predicted_t),
        R=predicted_r,
        T=predicted_t,
    )


def _run(task):
    kind, geometry, omega, params = task
    if kind == 'full':
        return full_scattering(geometry, omega, **params)
    return half_scattering(geometry, omega, kind, **params)


def decompose(geometry, omega, h=0.05, junction_refine=3, n_layers=3,
              n_terms=15, workers=None):
    """Run the full, Neumann and Dirichlet problems and verify the
    decomposition.

    Parameters
    ----------
    workers : int, optional
        Number of processes; the three problems run sequentially if None.

    Returns
    -------
    runs : dict
        {'full': ..., 'neumann': ..., 'dirichlet': ...} ScatteringMatrices.
    report : DecompositionReport
    """
    params = _mesh_parameters(h, junction_refine, n_layers)
    params['n_terms'] = n_terms
    tasks = [(kind, geometry, omega, params) for kind in KINDS]
    if workers:
        with Pool(min(workers, len(tasks))) as pool:
            results = pool.map(_run, tasks)
    else:
        results = [_run(task) for task in tasks]
    runs = dict(zip(KINDS, results))
    full = runs['full']
    report = verify_decomposition(full, full, runs['neumann'],
                                  runs['dirichlet'])
    logger.info('Decomposition residuals: R %.2e, T %.2e',
                report.residual_R, report.residual_T)
    return runs, report
