# coding=utf8
"""Quadratic Lagrange elements on triangles.

Assembly of the Helmholtz operator -Δ - ω² with modal Dirichlet-to-Neumann
(DtN) conditions on the truncation sections, Neumann or Dirichlet
conditions on the ligament end caps, and sparse direct solution.

The bilinear form is not conjugated, so assembled matrices are complex
symmetric:

    a(u, v) = ∫ ∇u·∇v - ω² u v - Σ_n iβ_n (∫_Γ u φ_n)(∫_Γ v φ_n).
"""
import logging
import time
from types import MappingProxyType

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import sparse
from scipy.sparse.linalg import splu

from .mesh import SIGMA, SYMMETRY, TRUNCATION_LEFT, TRUNCATION_RIGHT
from .modes import ModeBasis, Trace

__all__ = [
    'FemSpace',
    'DtnOperator',
    'SparseComplexSystem',
    'FemSolution',
    'assemble',
    'solve',
    'stiffness',
    'mass',
    'volume_load',
    'boundary_load',
    'l2_error',
    'AssemblyError',
    'SolverError',
    'ABC',
]

logger = logging.getLogger(__name__)

ABC = ('none', 'neumann', 'dirichlet')

# 6-point rule exact for polynomials of degree 4, barycentric coordinates
DUNAVANT_4 = MappingProxyType({
    'points': np.array([
        [0.108103018168070, 0.445948490915965, 0.445948490915965],
        [0.445948490915965, 0.108103018168070, 0.445948490915965],
        [0.445948490915965, 0.445948490915965, 0.108103018168070],
        [0.816847572980459, 0.091576213509771, 0.091576213509771],
        [0.091576213509771, 0.816847572980459, 0.091576213509771],
        [0.091576213509771, 0.091576213509771, 0.816847572980459],
    ]),
    'weights': np.array([0.223381589678011] * 3 + [0.109951743655322] * 3),
})

EDGE_ORDER = 8
RESIDUAL_TOL = 1e-8


class AssemblyError(Exception):
    """Class for assembly errors."""
    pass


class SolverError(Exception):
    """Class for linear solver failures."""
    pass


def _shape_values(lam):
    """P2 shape functions at barycentric points, shape (n_points, 6)."""
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    return np.column_stack([
        l0 * (2 * l0 - 1),
        l1 * (2 * l1 - 1),
        l2 * (2 * l2 - 1),
        4 * l0 * l1,
        4 * l1 * l2,
        4 * l2 * l0,
    ])


def _shape_derivatives(lam):
    """Derivatives of the P2 shape functions with respect to the
    barycentric coordinates, shape (n_points, 6, 3)."""
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    zero = np.zeros_like(l0)
    rows = [
        [4 * l0 - 1, zero, zero],
        [zero, 4 * l1 - 1, zero],
        [zero, zero, 4 * l2 - 1],
        [4 * l1, 4 * l0, zero],
        [zero, 4 * l2, 4 * l1],
        [4 * l2, zero, 4 * l0],
    ]
    return np.array(rows).transpose(2, 0, 1)


def _edge_shapes(t):
    """Quadratic shape functions on an edge: start, end, midpoint."""
    return np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1),
                            4 * t * (1 - t)])


class FemSpace(object):
    """Continuous P2 space on a mesh.

    Degrees of freedom are the mesh nodes followed by the edge midpoints,
    so the DOF count is n_nodes + n_edges.

    Attributes
    ----------
    mesh : modeconv.mesh.Mesh
    dofs : numpy.ndarray, shape (n_triangles, 6)
        Local to global numbering: vertices, then edges (0,1), (1,2), (2,0).
    coordinates : numpy.ndarray, shape (n_dofs, 2)
    """

    degree = 2

    def __init__(self, mesh):
        self.mesh = mesh
        nv = mesh.n_nodes
        tri = mesh.triangles

        local = tri[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 3, 2)
        keys = np.sort(local, axis=2)
        keys = keys[..., 0] * nv + keys[..., 1]
        unique, inverse = np.unique(keys.ravel(), return_inverse=True)
        self._edge_keys = unique
        self.n_edges = len(unique)

        self.dofs = np.hstack([tri, nv + inverse.reshape(-1, 3)])
        ends = np.column_stack([unique // nv, unique % nv])
        middles = mesh.nodes[ends].mean(axis=1)
        self.coordinates = np.vstack([mesh.nodes, middles])

        p = mesh.nodes[tri]
        self.areas = mesh.areas()
        double = 2 * self.areas
        self.gradients = np.stack([
            np.column_stack([p[:, 1, 1] - p[:, 2, 1],
                             p[:, 2, 0] - p[:, 1, 0]]),
            np.column_stack([p[:, 2, 1] - p[:, 0, 1],
                             p[:, 0, 0] - p[:, 2, 0]]),
            np.column_stack([p[:, 0, 1] - p[:, 1, 1],
                             p[:, 1, 0] - p[:, 0, 0]]),
        ], axis=1) / double[:, None, None]

    def __repr__(self):
        return 'FemSpace(degree=2, dofs={})'.format(self.n_dofs)

    @property
    def n_dofs(self):
        return self.mesh.n_nodes + self.n_edges

    def edge_dofs(self, edges):
        """Return (start, end, midpoint) DOFs of the given vertex pairs."""
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        nv = self.mesh.n_nodes
        keys = np.sort(edges, axis=1)
        keys = keys[:, 0] * nv + keys[:, 1]
        index = np.searchsorted(self._edge_keys, keys)
        index = np.minimum(index, len(self._edge_keys) - 1)
        if np.any(self._edge_keys[index] != keys):
            raise AssemblyError('Edge does not belong to the mesh')
        return np.column_stack([edges, nv + index])

    def boundary_dofs(self, tags):
        """DOFs lying on edges with any of the tags."""
        edges = [self.mesh.edges_with_tag(tag) for tag in tags]
        edges = np.vstack(edges) if edges else np.zeros((0, 2), int)
        if not len(edges):
            return np.zeros(0, dtype=np.int64)
        return np.unique(self.edge_dofs(edges))

    def quadrature_points(self, rule=DUNAVANT_4):
        """Physical quadrature points, shape (n_triangles, n_points, 2)."""
        p = self.mesh.nodes[self.mesh.triangles]
        return np.einsum('qk,tkd->tqd', rule['points'], p)

    def shape_gradients(self, rule=DUNAVANT_4):
        """Physical shape gradients, shape (n_triangles, n_points, 6, 2)."""
        derivatives = _shape_derivatives(rule['points'])
        return np.einsum('qik,tkd->tqid', derivatives, self.gradients)


def _assemble_matrix(space, local):
    rows = np.broadcast_to(space.dofs[:, :, None], local.shape)
    cols = np.broadcast_to(space.dofs[:, None, :], local.shape)
    matrix = sparse.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())),
        shape=(space.n_dofs, space.n_dofs))
    return matrix.tocsr()


def stiffness(space, rule=DUNAVANT_4):
    """Return the matrix of ∫ ∇u·∇v."""
    grads = space.shape_gradients(rule)
    local = np.einsum('t,q,tqid,tqjd->tij', space.areas, rule['weights'],
                      grads, grads)
    return _assemble_matrix(space, local)


def mass(space, rule=DUNAVANT_4):
    """Return the matrix of ∫ u v."""
    shapes = _shape_values(rule['points'])
    reference = np.einsum('q,qi,qj->ij', rule['weights'], shapes, shapes)
    local = space.areas[:, None, None] * reference[None, :, :]
    return _assemble_matrix(space, local)


def volume_load(space, func, rule=DUNAVANT_4):
    """Return the vector ∫ f v for f(x, y) given as a callable."""
    points = space.quadrature_points(rule)
    values = np.broadcast_to(func(points[..., 0], points[..., 1]),
                             points.shape[:2])
    shapes = _shape_values(rule['points'])
    local = np.einsum('t,q,tq,qi->ti', space.areas, rule['weights'],
                      values, shapes)
    out = np.zeros(space.n_dofs, dtype=local.dtype)
    np.add.at(out, space.dofs, local)
    return out


def boundary_load(space, tags, func, order=EDGE_ORDER):
    """Return the vector ∫_Γ g v on the edges with the given tags."""
    edges = np.vstack([space.mesh.edges_with_tag(tag) for tag in tags])
    return _edge_integrals(space, edges, func, order)


def _edge_integrals(space, edges, func, order=EDGE_ORDER):
    dofs = space.edge_dofs(edges)
    t, w = leggauss(order)
    t = (t + 1) / 2
    w = w / 2
    start = space.mesh.nodes[edges[:, 0]]
    end = space.mesh.nodes[edges[:, 1]]
    points = start[:, None, :] + t[None, :, None] * (end - start)[:, None, :]
    length = np.linalg.norm(end - start, axis=1)
    values = np.broadcast_to(func(points[..., 0], points[..., 1]),
                             points.shape[:2])
    local = np.einsum('e,q,eq,qi->ei', length, w, values, _edge_shapes(t))
    out = np.zeros(space.n_dofs, dtype=local.dtype)
    np.add.at(out, dofs, local)
    return out


class DtnOperator(object):
    """Modal Dirichlet-to-Neumann condition on a truncation section.

    For the outgoing part of the field, ∂_ν u = Σ_n iβ_n (∫_Γ u φ_n) φ_n,
    the sum running over the first n_terms transverse modes. Evanescent
    terms have iβ_n = -|β_n| < 0.

    Attributes
    ----------
    tag : int
        TRUNCATION_LEFT or TRUNCATION_RIGHT.
    basis : modeconv.modes.ModeBasis
    n_terms : int
    abscissa : float
        x of the section.
    vectors : scipy.sparse.csc_matrix, shape (n_dofs, n_terms)
        Columns ∫_Γ φ_n ψ_j.
    coefficients : numpy.ndarray of complex
        iβ_n.
    """

    def __init__(self, space, tag, omega, n_terms=15):
        if tag not in (TRUNCATION_LEFT, TRUNCATION_RIGHT):
            raise AssemblyError('DtN conditions live on truncation sections')
        self.basis = ModeBasis(omega, max(n_terms, 2))
        if n_terms < self.basis.propagating:
            msg = ('DtN needs at least the {} propagating modes, '
                   'got n_terms = {}')
            raise AssemblyError(msg.format(self.basis.propagating, n_terms))

        edges = space.mesh.edges_with_tag(tag)
        if not len(edges):
            raise AssemblyError('Mesh has no edges on the truncation section')

        self.space = space
        self.tag = tag
        self.n_terms = n_terms
        self.abscissa = float(space.mesh.nodes[edges, 0].mean())

        columns = []
        for n in range(n_terms):
            columns.append(_edge_integrals(
                space, edges, lambda x, y, n=n: ModeBasis.profile(n, y)))
        self.vectors = sparse.csc_matrix(np.column_stack(columns))
        self.coefficients = 1j * self.basis.betas[:n_terms]

    def matrix(self):
        """Return the term -Σ iβ_n b_n b_nᵀ of the system matrix."""
        scale = sparse.diags(-self.coefficients)
        return (self.vectors @ scale @ self.vectors.T).tocsr()

    def incident_load(self, mode, x0):
        """Load of the incident wave w⁺_mode(x + x0) on the left section.

        On x = -R the total field satisfies ∂_ν u = T u - 2iβ u_inc, which
        gives the load -2iβ_i·e^{iβ_i(x0 - R)}/√β_i·∫_Γ φ_{i-1} ψ_j.
        """
        if self.tag != TRUNCATION_LEFT:
            raise AssemblyError('Incident waves enter on the left section')
        self.basis.check_propagating(mode)
        beta = self.basis.beta(mode).real
        amplitude = np.exp(1j * beta * (self.abscissa + x0)) / np.sqrt(beta)
        column = self.vectors[:, mode - 1].toarray().ravel()
        return -2j * beta * amplitude * column


class SparseComplexSystem(object):
    """Reduced linear system A x = b.

    Attributes
    ----------
    matrix : scipy.sparse matrix
        Complex symmetric, restricted to the unconstrained DOFs.
    rhs : numpy.ndarray, shape (n_free, n_rhs)
    free : numpy.ndarray or None
        Unconstrained DOFs of the space, None when nothing is constrained.
    n_dofs : int
    residuals : numpy.ndarray or None
        Relative residuals of the last solve.
    """

    def __init__(self, matrix, rhs, free=None, n_dofs=None, info=None):
        self.matrix = sparse.csc_matrix(matrix)
        rhs = np.asarray(rhs)
        self.rhs = rhs.reshape(len(rhs), -1)
        self.free = free
        self.n_dofs = self.matrix.shape[0] if n_dofs is None else n_dofs
        self.info = dict(info or {})
        self.residuals = None

    def __repr__(self):
        return 'SparseComplexSystem(size={}, rhs={})'.format(
            self.matrix.shape[0], self.rhs.shape[1])

    def symmetry_defect(self):
        """Largest entry of |A - Aᵀ|."""
        difference = self.matrix - self.matrix.T
        return float(abs(difference).max()) if difference.nnz else 0.

    def expand(self, reduced):
        """Embed reduced solutions into the full DOF vector."""
        if self.free is None:
            return reduced
        full = np.zeros((self.n_dofs,) + reduced.shape[1:],
                        dtype=reduced.dtype)
        full[self.free] = reduced
        return full


def assemble(space, omega, dtn=(), abc='none', incident=(1, 2), x0=0.5,
             source=None):
    """Assemble the scattering problem of the total field.

    Parameters
    ----------
    space : FemSpace
    omega : float
    dtn : sequence of DtnOperator
        The operator on TRUNCATION_LEFT carries the incident waves.
    abc : {'none', 'neumann', 'dirichlet'}
        Condition on the caps Σ (tags SIGMA and SYMMETRY). Neumann is
        natural; Dirichlet removes the DOFs of the caps.
    incident : sequence of int
        1-based incident modes, one right-hand side each.
    x0 : float
        Reference abscissa of the modes, w⁺_i(x + x0).
    source : callable, optional
        Volume source f(x, y) added to every right-hand side.

    Returns
    -------
    system : SparseComplexSystem

    Raises
    ------
    AssemblyError
        On unknown ABC, Dirichlet without caps, or incident waves without a
        left DtN operator.
    """
    if abc not in ABC:
        msg = 'Unknown condition on the caps: {!r}, expected one of {}'
        raise AssemblyError(msg.format(abc, ABC))

    started = time.time()
    matrix = stiffness(space) - omega ** 2 * mass(space)
    for operator in dtn:
        matrix = matrix + operator.matrix()

    left = [op for op in dtn if op.tag == TRUNCATION_LEFT]
    incident = tuple(incident)
    if incident and not left:
        raise AssemblyError('Incident waves need a DtN operator on the left')

    columns = []
    for mode in incident:
        columns.append(left[0].incident_load(mode, x0))
    if source is not None:
        load = volume_load(space, source)
        columns = [column + load for column in columns] or [load]
    if not columns:
        raise AssemblyError('Nothing drives the system')
    rhs = np.column_stack(columns).astype(complex)

    free = None
    if abc == 'dirichlet':
        fixed = space.boundary_dofs((SIGMA, SYMMETRY))
        if not fixed.size:
            raise AssemblyError(
                'Dirichlet condition requested but the mesh has no SIGMA '
                'edges')
        mask = np.ones(space.n_dofs, dtype=bool)
        mask[fixed] = False
        free = np.flatnonzero(mask)
        matrix = matrix[free][:, free]
        rhs = rhs[free]

    logger.info('Assembled %d DOFs (%d free) in %.2f s',
                space.n_dofs, matrix.shape[0], time.time() - started)
    info = {'omega': omega, 'abc': abc, 'incident': incident,
            'dtn_terms': [op.n_terms for op in dtn]}
    return SparseComplexSystem(matrix, rhs, free=free, n_dofs=space.n_dofs,
                               info=info)


def solve(system, residual_tol=RESIDUAL_TOL):
    """Factorize once and solve for every right-hand side.

    Parameters
    ----------
    system : SparseComplexSystem
    residual_tol : float
        Largest accepted relative residual ‖Ax - b‖/‖b‖.

    Returns
    -------
    values : numpy.ndarray, shape (n_dofs, n_rhs)
        Solutions on all DOFs, constrained ones being zero.

    Raises
    ------
    SolverError
        "resonant or degenerate system" on singular factorizations or
        excessive residuals.
    """
    started = time.time()
    matrix = system.matrix
    dtype = np.result_type(matrix.dtype, system.rhs.dtype)
    try:
        factor = splu(matrix.astype(dtype).tocsc())
    except RuntimeError as err:
        msg = 'resonant or degenerate system: {}'.format(err)
        raise SolverError(msg)

    reduced = factor.solve(system.rhs.astype(dtype))
    residual = matrix @ reduced - system.rhs
    scale = np.linalg.norm(system.rhs, axis=0)
    scale[scale == 0] = 1.
    system.residuals = np.linalg.norm(residual, axis=0) / scale

    if not np.all(np.isfinite(reduced)) or \
            np.any(system.residuals > residual_tol):
        msg = 'resonant or degenerate system: relative residual {:.3e}'
        raise SolverError(msg.format(np.max(system.residuals)))

    logger.info('Solved %d unknowns, %d right-hand sides in %.2f s, '
                'residual %.2e', matrix.shape[0], system.rhs.shape[1],
                time.time() - started, np.max(system.residuals))
    return system.expand(reduced)


class FemSolution(object):
    """P2 fields on a space, one column per right-hand side."""

    def __init__(self, space, values):
        self.space = space
        values = np.asarray(values)
        self.values = values.reshape(len(values), -1)

    def __repr__(self):
        return 'FemSolution(dofs={}, columns={})'.format(*self.values.shape)

    def column(self, k=0):
        return self.values[:, k]

    def nodal(self, k=0):
        """Values at the mesh vertices."""
        return self.values[:self.space.mesh.n_nodes, k]

    def trace(self, tag, k=0, order=6):
        """Trace on the vertical section carrying the tag.

        Returns
        -------
        trace : modeconv.modes.Trace
        """
        edges = self.space.mesh.edges_with_tag(tag)
        if not len(edges):
            raise AssemblyError('No edges with tag {}'.format(tag))
        dofs = self.space.edge_dofs(edges)
        nodes = self.space.mesh.nodes
        return Trace.from_p2(nodes[edges[:, 0], 1], nodes[edges[:, 1], 1],
                             self.values[dofs, k], order=order,
                             abscissa=float(nodes[edges, 0].mean()))

    def boundary_flux(self, tag, k=0, order=EDGE_ORDER):
        """Return ∫ ∂_ν u over the edges with the tag, ν the outward normal.

        The normal derivative is taken from the gradient of the element
        owning each edge.
        """
        mesh = self.space.mesh
        edges = mesh.edges_with_tag(tag)
        if not len(edges):
            raise AssemblyError('No edges with tag {}'.format(tag))
        nv = mesh.n_nodes
        pairs = mesh.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 3, 2)
        local = np.sort(pairs, axis=2)
        keys = (local[..., 0] * nv + local[..., 1]).ravel()
        ordered = np.argsort(keys, kind='stable')
        wanted = np.sort(edges, axis=1)
        position = np.searchsorted(keys[ordered],
                                   wanted[:, 0] * nv + wanted[:, 1])
        owner = ordered[position] // 3

        t, w = leggauss(order)
        t = (t + 1) / 2
        w = w / 2
        start = mesh.nodes[edges[:, 0]]
        end = mesh.nodes[edges[:, 1]]
        points = (start[:, None, :] +
                  t[None, :, None] * (end - start)[:, None, :])

        gradients = self.space.gradients[owner]
        corner = mesh.nodes[mesh.triangles[owner, 0]]
        lam = np.einsum('ejd,eqd->eqj', gradients,
                        points - corner[:, None, :])
        lam[..., 0] += 1
        derivatives = _shape_derivatives(lam.reshape(-1, 3)).reshape(
            lam.shape[:2] + (6, 3))
        shapes = np.einsum('eqik,ekd->eqid', derivatives, gradients)
        coefficients = self.values[self.space.dofs[owner], k]
        grad = np.einsum('ei,eqid->eqd', coefficients, shapes)
        # boundary edges have the domain on their left
        tangent = end - start
        normal = np.column_stack([tangent[:, 1], -tangent[:, 0]])
        return complex(np.einsum('q,eqd,ed->', w, grad, normal))

    def region_extrema(self, region, k=0):
        """Return (max |Re u|, max |Im u|) over a mesh region."""
        mask = self.space.mesh.regions == region
        dofs = np.unique(self.space.dofs[mask])
        if not dofs.size:
            raise AssemblyError('Empty region {}'.format(region))
        values = self.values[dofs, k]
        return float(np.abs(values.real).max()), \
            float(np.abs(values.imag).max())


def l2_error(space, values, exact, rule=DUNAVANT_4):
    """Return ‖u_h - u‖ in L²(Ω) for a P2 field and a callable u(x, y)."""
    points = space.quadrature_points(rule)
    shapes = _shape_values(rule['points'])
    approx = np.einsum('qi,ti->tq', shapes, values[space.dofs])
    diff = approx - exact(points[..., 0], points[..., 1])
    squares = np.einsum('t,q,tq->', space.areas, rule['weights'],
                        np.abs(diff) ** 2)
    return float(np.sqrt(squares))
