# coding=utf8
"""CSV, legacy ASCII VTK and JSON writers."""
import csv
import json
import os

import numpy as np

__all__ = [
    'write_matrices_csv',
    'write_landscape_csv',
    'write_vtk',
    'write_json',
    'read_json',
    'to_jsonable',
]

LINE_CELL = 3
TRIANGLE_CELL = 5


def _complex_columns(prefix):
    return ['{}_re'.format(prefix), '{}_im'.format(prefix)]


def write_matrices_csv(path, matrices):
    """One row per ScatteringMatrices: kind, entries, energy rows and the
    mesh metadata.

    Half problems leave the transmission columns empty.
    """
    names = ['r11', 'r12', 'r21', 'r22', 't11', 't12', 't21', 't22']
    header = ['kind']
    for name in names:
        header += _complex_columns(name)
    header += ['energy_row1', 'energy_row2', 'omega', 'h', 'n_dofs']

    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for item in matrices:
            entries = dict(item.entries())
            row = [item.kind]
            for name in names:
                value = entries.get(name)
                row += ['', ''] if value is None else [value.real, value.imag]
            row += list(item.energy_rows())
            row += [item.metadata.get(key, '')
                    for key in ('omega', 'h', 'n_dofs')]
            writer.writerow(row)


def write_landscape_csv(path, landscape):
    """Sweep landscape: ℓ₋, ℓ₊, J, validity and the R_N, R_D entries."""
    header = ['ell_minus', 'ell_plus', 'J', 'valid']
    for which in ('N', 'D'):
        for i in range(2):
            for j in range(2):
                header += _complex_columns('r{}{}_{}'.format(i + 1, j + 1,
                                                             which))

    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for point in landscape.points:
            row = [point.ell_minus, point.ell_plus, point.J, int(point.valid)]
            for matrix in (point.R_N, point.R_D):
                if matrix is None:
                    row += [''] * 8
                    continue
                for value in np.asarray(matrix).ravel():
                    row += [value.real, value.imag]
            writer.writerow(row)


def write_vtk(path, mesh, fields=None, title='modeconv'):
    """Write a mesh and vertex fields as a legacy ASCII unstructured grid.

    Triangles carry their region, boundary edges are written as line cells
    carrying their tag. Complex fields are split into `_re`, `_im` and
    `_abs` scalars.

    Parameters
    ----------
    path : str
    mesh : modeconv.mesh.Mesh
    fields : dict, optional
        {name: array of vertex values}.
    title : str
    """
    fields = fields or {}
    nodes = mesh.nodes
    triangles = mesh.triangles
    edges = mesh.boundary_edges
    n_cells = len(triangles) + len(edges)

    with open(path, 'w') as f:
        f.write('# vtk DataFile Version 2.0\n')
        f.write('{}\n'.format(title))
        f.write('ASCII\n')
        f.write('DATASET UNSTRUCTURED_GRID\n')

        f.write('POINTS {} float\n'.format(len(nodes)))
        for x, y in nodes:
            f.write('{} {} 0\n'.format(x, y))

        f.write('CELLS {} {}\n'.format(
            n_cells, 4 * len(triangles) + 3 * len(edges)))
        for a, b, c in triangles:
            f.write('3 {} {} {}\n'.format(a, b, c))
        for a, b in edges:
            f.write('2 {} {}\n'.format(a, b))

        f.write('CELL_TYPES {}\n'.format(n_cells))
        f.write('{}\n'.format(TRIANGLE_CELL) * len(triangles))
        f.write('{}\n'.format(LINE_CELL) * len(edges))

        f.write('CELL_DATA {}\n'.format(n_cells))
        _scalars(f, 'region', np.concatenate(
            [mesh.regions, -np.ones(len(edges), dtype=int)]), 'int')
        _scalars(f, 'boundary_tag', np.concatenate(
            [np.zeros(len(triangles), dtype=int), mesh.boundary_tags]), 'int')

        if fields:
            f.write('POINT_DATA {}\n'.format(len(nodes)))
        for name, values in fields.items():
            values = np.asarray(values)[:len(nodes)]
            if np.iscomplexobj(values):
                _scalars(f, name + '_re', values.real)
                _scalars(f, name + '_im', values.imag)
                _scalars(f, name + '_abs', np.abs(values))
            else:
                _scalars(f, name, values)


def _scalars(f, name, values, kind='float'):
    f.write('SCALARS {} {}\n'.format(name, kind))
    f.write('LOOKUP_TABLE default\n')
    for value in values:
        f.write('{}\n'.format(value))


def to_jsonable(value):
    """Convert numpy scalars/arrays and complex numbers for json."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {'re': float(value.real), 'im': float(value.imag)}
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path, data):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w') as f:
        json.dump(to_jsonable(data), f, indent=2, sort_keys=True)


def read_json(path):
    with open(path) as f:
        return json.load(f)
