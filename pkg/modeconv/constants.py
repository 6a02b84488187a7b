# coding=utf8
"""Junction constant C_Ξ and Green's function constants Γ(y).

C_Ξ is the constant of the far field Y ~ ξ_x + C_Ξ in the strip of the
harmonic function on the strip/half-plane junction with unit flux and
Y ~ (1/π)·ln(1/ρ) in the half plane.

Γ(y) is the finite part at A = (-1/2, y) of the outgoing Green's function
of the half channel x < -1/2 with a unit boundary source at A:
γ = (1/π)·ln(1/r) + Γ + O(r).
"""
import json
import logging
import os
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import hankel1

from .fem import (DtnOperator, FemSolution, FemSpace, SparseComplexSystem,
                  assemble, boundary_load, solve, stiffness)
from .mesh import ARC, CAP, TRUNCATION_LEFT, channel_mesh, junction_mesh
from .modes import ModeBasis, extract_coefficients

__all__ = [
    'AsymptoticConstants',
    'CXiResult',
    'GammaResult',
    'ConstantsCache',
    'compute_c_xi',
    'compute_gamma',
    'compute_constants',
    'flux_residual',
    'singular_constant',
    'ConstantsError',
]

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 0.1
# mesh size in the cutoff annulus is r0 / ANNULUS_DIVISIONS
ANNULUS_DIVISIONS = 24
# ordinates are canonicalized to this many decimals before meshing
ORDINATE_DECIMALS = 12
FLUX_TOL = 1e-2


class ConstantsError(Exception):
    """Class for auxiliary constant computation errors."""
    pass


@dataclass(frozen=True)
class CXiResult(object):
    value: float
    error: float
    estimates: tuple
    flux_balance: float
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GammaResult(object):
    value: complex
    error: float
    y: float
    omega: float
    far_field: tuple
    provenance: dict = field(default_factory=dict)


def _junction_solution(rho, L, h, levels):
    """Solve the truncated junction problem and return (C, flux balance)."""
    mesh = junction_mesh(rho, L, h=h, levels=levels)
    space = FemSpace(mesh)
    matrix = stiffness(space).tocsr()
    load = boundary_load(space, (CAP,), lambda x, y: np.ones_like(x))

    fixed = space.boundary_dofs((ARC,))
    radius = np.linalg.norm(space.coordinates[fixed], axis=1)
    data = np.log(1 / radius) / np.pi

    mask = np.ones(space.n_dofs, dtype=bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    rhs = load[free] - matrix[free][:, fixed] @ data
    system = SparseComplexSystem(matrix[free][:, free], rhs, free=free,
                                 n_dofs=space.n_dofs)
    values = solve(system)[:, 0]
    values[fixed] = data

    solution = FemSolution(space, values)
    trace = solution.trace(CAP)
    # the outward fluxes through the arc and the unit cap cancel
    flux = solution.boundary_flux(ARC).real + trace.length()
    mean = np.sum(trace.weights * trace.values.real) / trace.length()
    return float(mean - L), float(flux)


def compute_c_xi(rho=5., L=3., h=0.05, levels=3, refinements=3, tol=1e-3):
    """Compute C_Ξ with Richardson extrapolation in the truncation radius.

    The truncated problem is solved for radii rho·2^k, k < refinements; the
    truncation error behaves as ρ⁻², so successive radii are combined as
    (4·C(2ρ) - C(ρ))/3.

    Parameters
    ----------
    rho : float
        Smallest truncation radius of the half disk, at least 5.
    L : float
        Strip length, at least 3.
    h : float
        Mesh size near the junction.
    levels : int
        Halvings of h at the junction corners.
    refinements : int
        Number of radii, at least 2.
    tol : float
        Largest accepted difference of successive extrapolations.

    Returns
    -------
    result : CXiResult

    Raises
    ------
    ConstantsError
        If parameters are out of range, successive extrapolations differ
        by more than tol or the flux through the arc misses the unit cap
        flux by more than FLUX_TOL.
    """
    if rho < 5 or L < 3:
        msg = 'Junction truncation too small: rho = {} (>= 5), L = {} (>= 3)'
        raise ConstantsError(msg.format(rho, L))
    if refinements < 2:
        raise ConstantsError('At least two truncation radii are needed')

    estimates = []
    balance = 0.
    for k in range(refinements):
        value, flux = _junction_solution(rho * 2 ** k, L, h, levels)
        logger.info('C_Xi(rho=%g, L=%g) = %.8f, flux balance %.1e',
                    rho * 2 ** k, L, value, flux)
        if abs(flux) > FLUX_TOL:
            msg = ('Junction flux balance violated at rho = {}: '
                   '{:.2e} > {:.1e}')
            raise ConstantsError(msg.format(rho * 2 ** k, flux, FLUX_TOL))
        estimates.append(value)
        balance = max(balance, abs(flux))

    extrapolated = [(4 * b - a) / 3 for a, b in zip(estimates, estimates[1:])]
    if len(extrapolated) > 1:
        error = abs(extrapolated[-1] - extrapolated[-2])
        if error > tol:
            msg = ('C_Xi extrapolation does not converge: successive '
                   'estimates {} differ by {:.2e} > {:.1e}')
            raise ConstantsError(msg.format(extrapolated, error, tol))
    else:
        error = abs(estimates[1] - estimates[0]) / 3

    provenance = {'rho': rho, 'L': L, 'h': h, 'levels': levels,
                  'refinements': refinements}
    return CXiResult(value=float(extrapolated[-1]), error=float(error),
                     estimates=tuple(estimates), flux_balance=balance,
                     provenance=provenance)


def singular_constant(omega):
    """Constant of (i/2)·H₀⁽¹⁾(ωr) = (1/π)·ln(1/r) + κ + o(1)."""
    return 0.5j - (np.log(omega / 2) + np.euler_gamma) / np.pi


def _cutoff(r, r0):
    """C² step χ, its first and second radial derivatives."""
    t = np.clip((r - r0) / r0, 0, 1)
    step = t ** 3 * (10 - 15 * t + 6 * t ** 2)
    slope = 30 * t ** 2 * (1 - t) ** 2 / r0
    bend = 60 * t * (1 - t) * (1 - 2 * t) / r0 ** 2
    return 1 - step, -slope, -bend


def _regular_source(omega, center, r0):
    """Source 2∇χ·∇g + gΔχ of the regular part, g = (i/2)·H₀⁽¹⁾(ωr)."""

    def source(x, y):
        r = np.hypot(x - center[0], y - center[1])
        inside = (r > r0) & (r < 2 * r0)
        out = np.zeros(r.shape, dtype=complex)
        rr = r[inside]
        _, d1, d2 = _cutoff(rr, r0)
        g = 0.5j * hankel1(0, omega * rr)
        dg = -0.5j * omega * hankel1(1, omega * rr)
        out[inside] = 2 * d1 * dg + g * (d2 + d1 / rr)
        return out

    return source


def _gamma_single(y, omega, h, levels, R, r0, n_terms, annulus_h):
    mesh = channel_mesh(R, y, h=h, levels=levels, refine_radius=2 * r0,
                        refine_h=annulus_h)
    space = FemSpace(mesh)
    center = np.array([-0.5, y])
    operator = DtnOperator(space, TRUNCATION_LEFT, omega, n_terms)
    system = assemble(space, omega, dtn=[operator], incident=(),
                      source=_regular_source(omega, center, r0))
    solution = FemSolution(space, solve(system))

    node = int(np.argmin(np.linalg.norm(mesh.nodes - center, axis=1)))
    value = solution.values[node, 0] + singular_constant(omega)

    basis = ModeBasis(omega, n_terms)
    far = extract_coefficients(solution.trace(TRUNCATION_LEFT), basis,
                               x0=0.5)
    return complex(value), tuple(complex(s) for s in far.values)


def compute_gamma(y_attach, omega, h=0.05, levels=3, R=1.5, r0=None,
                  n_terms=15, estimate_error=True, cache=None):
    """Compute Γ(y) by singularity subtraction.

    γ = χ·g + γ_reg with g = (i/2)·H₀⁽¹⁾(ωr) and a cutoff χ equal to 1 for
    r < r0 and 0 for r > 2·r0. The regular part solves the Helmholtz
    problem with the source 2∇χ·∇g + gΔχ, Neumann walls and an outgoing DtN
    condition at x = -R; Γ = γ_reg(A) + κ_ω. The mesh size in the
    annulus r0 < r < 2·r0 is r0 / ANNULUS_DIVISIONS. Ordinates are mapped
    to min(y, 1 - y), rounded to ORDINATE_DECIMALS, since Γ(y) = Γ(1 - y).

    Parameters
    ----------
    y_attach : float
    omega : float
    h, levels : mesh size and refinement levels at A.
    R : float
        Truncation abscissa.
    r0 : float, optional
        Cutoff radius, min(0.1, 0.4·min(y, 1 - y)) by default.
    n_terms : int
        DtN terms.
    estimate_error : bool
        Compare with a solve on a mesh twice as coarse, annulus included.
    cache : ConstantsCache, optional

    Returns
    -------
    result : GammaResult

    Raises
    ------
    ConstantsError
        "cutoff too large" if the cutoff ball reaches the channel corners
        or the truncation section.
    """
    if not 0 < y_attach < 1:
        msg = 'Source ordinate must lie in (0, 1), got {}'
        raise ConstantsError(msg.format(y_attach))
    y = round(min(y_attach, 1 - y_attach), ORDINATE_DECIMALS)
    if r0 is None:
        r0 = min(DEFAULT_CUTOFF, 0.4 * y)
    if 2 * r0 >= y or 2 * r0 >= R - 0.5:
        msg = ('cutoff too large: r0 = {} reaches the channel corners or '
               'the truncation section')
        raise ConstantsError(msg.format(r0))

    key = None
    if cache is not None:
        key = cache.gamma_key(omega, y, h, levels, R, r0, n_terms)
        stored = cache.get(key)
        if stored is not None:
            logger.info('Gamma(%.6f) found in cache', y)
            return GammaResult(
                value=complex(stored['re'], stored['im']),
                error=stored['error'], y=y_attach, omega=omega,
                far_field=tuple(complex(*s) for s in stored['far_field']),
                provenance=stored['provenance'])

    annulus_h = r0 / ANNULUS_DIVISIONS
    value, far = _gamma_single(y, omega, h, levels, R, r0, n_terms,
                               annulus_h)
    error = float('nan')
    if estimate_error:
        coarse, _ = _gamma_single(y, omega, 2 * h, levels, R, r0, n_terms,
                                  2 * annulus_h)
        error = abs(value - coarse)
    logger.info('Gamma(%.6f) = %.6f%+.6fj, error %.1e',
                y, value.real, value.imag, error)

    provenance = {'h': h, 'levels': levels, 'R': R, 'r0': r0,
                  'annulus_h': annulus_h, 'n_terms': n_terms}
    if cache is not None:
        cache.put(key, {
            'omega': omega, 'y': y, 're': value.real, 'im': value.imag,
            'error': error,
            'far_field': [[s.real, s.imag] for s in far],
            'provenance': provenance,
        })
    return GammaResult(value=value, error=error, y=y_attach, omega=omega,
                       far_field=far, provenance=provenance)


def flux_residual(y, omega, gamma):
    """Return |Im(ωΓ) - (1 + 2β₁cos²(πy)/β₂)|."""
    betas = ModeBasis(omega, 2).betas.real
    expected = 1 + 2 * betas[0] * np.cos(np.pi * y) ** 2 / betas[1]
    return float(abs((omega * gamma).imag - expected))


@dataclass
class AsymptoticConstants(object):
    """C_Ξ and Γ at the attachment ordinates, with provenance.

    Attributes
    ----------
    c_xi : float
    omega : float
    gamma : dict
        {y: complex Γ(y)}.
    errors : dict
        Error estimates: {'c_xi': float, y: float, ...}.
    provenance : dict
    """
    c_xi: float
    omega: float
    gamma: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def gamma_at(self, y, tol=1e-9):
        for key, value in self.gamma.items():
            if abs(key - y) < tol or abs(key - (1 - y)) < tol:
                return value
        msg = 'Gamma is not available at y = {}'
        raise ConstantsError(msg.format(y))

    def to_dict(self):
        return {
            'omega': self.omega,
            'c_xi': self.c_xi,
            'gamma': [{'y': y, 're': g.real, 'im': g.imag,
                       'error': self.errors.get(y)}
                      for y, g in sorted(self.gamma.items())],
            'c_xi_error': self.errors.get('c_xi'),
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, data):
        gamma = {row['y']: complex(row['re'], row['im'])
                 for row in data['gamma']}
        errors = {row['y']: row.get('error') for row in data['gamma']}
        errors['c_xi'] = data.get('c_xi_error')
        return cls(c_xi=data['c_xi'], omega=data['omega'], gamma=gamma,
                   errors=errors, provenance=data.get('provenance', {}))


class ConstantsCache(object):
    """JSON file of computed constants; access is serialized."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()
        self._data = {}
        if path is not None and os.path.exists(path):
            with open(path) as f:
                self._data = json.load(f)

    def __contains__(self, key):
        return key in self._data

    def __len__(self):
        return len(self._data)

    @staticmethod
    def gamma_key(omega, y, h, levels, R, r0, n_terms):
        return 'gamma:{:.12g}:{:.12g}:{:.6g}:{}:{:.6g}:{:.6g}:{}'.format(
            omega, y, h, levels, R, r0, n_terms)

    @staticmethod
    def c_xi_key(rho, L, h, levels, refinements):
        return 'c_xi:{:.6g}:{:.6g}:{:.6g}:{}:{}'.format(rho, L, h, levels,
                                                       refinements)

    def get(self, key):
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        with self._lock:
            self._data[key] = value
            if self.path is None:
                return
            tmp = self.path + '.tmp'
            with open(tmp, 'w') as f:
                json.dump(self._data, f, indent=2, sort_keys=True)
            os.replace(tmp, self.path)


def compute_constants(omega, ys, h=0.05, levels=3, R=1.5, n_terms=15,
                      rho=5., L=3., refinements=3, cache=None):
    """Compute C_Ξ and Γ at the given ordinates.

    Returns
    -------
    constants : AsymptoticConstants
    """
    c_xi = None
    if cache is not None:
        key = cache.c_xi_key(rho, L, h, levels, refinements)
        c_xi = cache.get(key)
    if c_xi is None:
        result = compute_c_xi(rho=rho, L=L, h=h, levels=levels,
                              refinements=refinements)
        c_xi = {'value': result.value, 'error': result.error,
                'provenance': result.provenance}
        if cache is not None:
            cache.put(key, c_xi)
    else:
        logger.info('C_Xi found in cache')

    gamma, errors = {}, {'c_xi': c_xi['error']}
    solved = {}
    for y in ys:
        # Γ(y) = Γ(1 - y), one solve per mirrored pair
        canonical = round(min(y, 1 - y), ORDINATE_DECIMALS)
        if canonical not in solved:
            solved[canonical] = compute_gamma(
                y, omega, h=h, levels=levels, R=R, n_terms=n_terms,
                cache=cache)
        result = solved[canonical]
        gamma[float(y)] = result.value
        errors[float(y)] = result.error

    provenance = {'c_xi': c_xi['provenance'],
                  'gamma': {'h': h, 'levels': levels, 'R': R,
                            'n_terms': n_terms}}
    return AsymptoticConstants(c_xi=c_xi['value'], omega=omega, gamma=gamma,
                               errors=errors, provenance=provenance)
