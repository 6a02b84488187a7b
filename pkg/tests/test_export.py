import csv

import numpy as np
import pytest

from modeconv.export import (read_json, to_jsonable, write_json,
                             write_landscape_csv, write_matrices_csv,
                             write_vtk)
from modeconv.mesh import WALL, Mesh
from modeconv.optimize import Landscape, SweepGrid, SweepPoint
from modeconv.scattering import ScatteringMatrices


@pytest.fixture
def square():
    nodes = [[0, 0], [1, 0], [1, 1], [0, 1]]
    triangles = [[0, 1, 2], [0, 2, 3]]
    edges = [[0, 1], [1, 2], [2, 3], [3, 0]]
    return Mesh(nodes, triangles, edges, [WALL] * 4)


def _lines(path):
    with open(path) as f:
        return f.read().splitlines()


def test_write_vtk(tmp_path, square):
    path = str(tmp_path / 'field.vtk')
    field = np.array([1 + 1j, 2, 3j, -1])
    write_vtk(path, square, {'u1': field, 'level': [0., 1., 2., 3.]},
              title='square')
    lines = _lines(path)
    assert lines[:5] == ['# vtk DataFile Version 2.0', 'square', 'ASCII',
                         'DATASET UNSTRUCTURED_GRID', 'POINTS 4 float']
    assert 'CELLS 6 20' in lines
    types = lines[lines.index('CELL_TYPES 6') + 1:][:6]
    assert types == ['5', '5', '3', '3', '3', '3']
    assert 'CELL_DATA 6' in lines
    assert 'POINT_DATA 4' in lines
    for name in ('u1_re', 'u1_im', 'u1_abs', 'region', 'boundary_tag'):
        assert any(line.startswith('SCALARS ' + name) for line in lines)
    start = lines.index('SCALARS u1_abs float') + 2
    np.testing.assert_allclose([float(v) for v in lines[start:start + 4]],
                               np.abs(field))


def test_write_vtk_mesh_only(tmp_path, square):
    path = str(tmp_path / 'mesh.vtk')
    write_vtk(path, square)
    lines = _lines(path)
    assert 'POINT_DATA 4' not in lines
    tags = lines.index('SCALARS boundary_tag int') + 2
    assert lines[tags:tags + 6] == ['0', '0'] + [str(WALL)] * 4


def test_write_matrices_csv(tmp_path):
    path = str(tmp_path / 'matrices.csv')
    full = ScatteringMatrices('full', np.zeros((2, 2)), np.eye(2),
                              metadata={'omega': 4.7, 'h': 0.05,
                                        'n_dofs': 10})
    half = ScatteringMatrices('neumann', [[0, 1j], [1j, 0]])
    write_matrices_csv(path, [full, half])
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert [row['kind'] for row in rows] == ['full', 'neumann']
    assert float(rows[0]['t11_re']) == 1.
    assert rows[1]['t11_re'] == ''
    assert float(rows[1]['r12_im']) == 1.
    assert float(rows[1]['energy_row2']) == pytest.approx(1.)
    assert rows[0]['n_dofs'] == '10'


def test_write_landscape_csv(tmp_path, critical_spec):
    path = str(tmp_path / 'landscape.csv')
    grid = SweepGrid.around(critical_spec, n=1)
    anti = np.array([[0, 1], [1, 0]])
    points = [SweepPoint((0, 0), 1., 4 / 3, J=-3., valid=True,
                         R_N=anti, R_D=-anti),
              SweepPoint((0, 1), 1., 1.34, error='failed')]
    write_landscape_csv(path, Landscape(grid, points))
    with open(path) as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2
    assert float(rows[0]['r12_D_re']) == -1.
    assert rows[0]['valid'] == '1'
    assert rows[1]['valid'] == '0'
    assert rows[1]['r11_N_re'] == ''


def test_to_jsonable():
    data = {1.5: np.arange(3), 'z': 1 + 2j, 'flags': (np.bool_(True),),
            'n': np.int64(3), 'x': np.float32(0.5),
            'm': np.array([1j, 2])}
    out = to_jsonable(data)
    assert out['1.5'] == [0, 1, 2]
    assert out['z'] == {'re': 1., 'im': 2.}
    assert out['flags'] == [True]
    assert type(out['n']) is int
    assert out['x'] == 0.5
    assert out['m'] == [{'re': 0., 'im': 1.}, {'re': 2., 'im': 0.}]


def test_json_round_trip(tmp_path):
    path = str(tmp_path / 'nested' / 'report.json')
    write_json(path, {'residual': np.float64(1e-9), 'values': [1j]})
    assert read_json(path) == {'residual': 1e-9,
                               'values': [{'re': 0., 'im': 1.}]}
