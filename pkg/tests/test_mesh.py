from dataclasses import replace

import numpy as np
import pytest

from modeconv.geometry import WaveguideGeometry
from modeconv.mesh import (ARC, CAP, SIGMA, SYMMETRY, TRUNCATION_LEFT,
                           TRUNCATION_RIGHT, WALL, Mesh, MeshError,
                           build_mesh, channel_mesh, junction_mesh)


def test_straight_half_mesh(straight_half):
    mesh = build_mesh(straight_half, h=0.1)
    assert mesh.area() == pytest.approx(1.5)
    assert set(mesh.tags()) == {'WALL', 'TRUNCATION_LEFT', 'SYMMETRY'}
    mesh.check_conforming()
    assert mesh.quality().min() > 0.3
    assert mesh.info['domain'] == 'half'


def test_straight_full_mesh(straight_full):
    mesh = build_mesh(straight_full, h=0.1)
    assert mesh.area() == pytest.approx(3.)
    tags = mesh.tags()
    assert 'SYMMETRY' not in tags
    assert tags['TRUNCATION_LEFT'] == tags['TRUNCATION_RIGHT']
    mesh.check_conforming()
    half = build_mesh(straight_full.half(), h=0.1)
    assert mesh.signature() == (0.1, 3, 3, half.n_nodes)
    assert half.signature() == mesh.signature()


def test_ligament_mesh(one_ligament):
    mesh = build_mesh(one_ligament, h=0.1, junction_refine=2)
    mesh.check_conforming()
    spec = one_ligament.ligaments[0]
    # channel plus the tube of area length·width
    assert mesh.area() == pytest.approx(1. + spec.length * spec.width,
                                        rel=1e-3)
    tube = mesh.areas()[mesh.regions == 1].sum()
    assert tube == pytest.approx(spec.length * spec.width, rel=1e-3)

    sigma = mesh.nodes[mesh.nodes_with_tag(SIGMA)]
    np.testing.assert_allclose(sigma[:, 0], 0., atol=1e-12)
    assert np.ptp(sigma[:, 1]) == pytest.approx(spec.width)
    assert mesh.nodes_with_tag(SYMMETRY).size == 0


def test_mirror(one_ligament):
    half = build_mesh(one_ligament, h=0.1)
    full = half.mirror()
    full.check_conforming()
    assert full.area() == pytest.approx(2 * half.area())
    np.testing.assert_array_equal(full.nodes[:half.n_nodes], half.nodes)
    assert full.edges_with_tag(SIGMA).size == 0
    assert len(full.edges_with_tag(TRUNCATION_RIGHT)) == \
        len(half.edges_with_tag(TRUNCATION_LEFT))
    assert np.count_nonzero(full.regions == 1) == \
        2 * np.count_nonzero(half.regions == 1)
    with pytest.raises(MeshError, match='half meshes'):
        full.mirror()


def test_mesh_orientation():
    nodes = [[0, 0], [1, 0], [0, 1]]
    mesh = Mesh(nodes, [[0, 2, 1]], [[0, 1], [1, 2], [2, 0]], [WALL] * 3)
    assert mesh.areas()[0] == pytest.approx(0.5)
    assert mesh.quality()[0] == pytest.approx(4 * np.sqrt(3) * 0.5 / 4)
    with pytest.raises(ValueError):
        mesh.nodes[0, 0] = 1.


def test_check_quality_reports_location():
    nodes = [[0, 0], [1, 0], [0.5, 1e-4]]
    mesh = Mesh(nodes, [[0, 1, 2]], [[0, 1], [1, 2], [2, 0]], [WALL] * 3)
    with pytest.raises(MeshError, match=r'near \(0\.5'):
        mesh.check_quality(0.1)


def test_check_conforming_hanging_node():
    # node 4 splits the edge (0, 1) of the first triangle only
    nodes = [[0, 0], [2, 0], [1, 1], [1, -1], [1, 0]]
    triangles = [[0, 1, 2], [0, 3, 4], [4, 3, 1]]
    edges = [[0, 4], [4, 1], [1, 2], [2, 0], [0, 3], [3, 1]]
    mesh = Mesh(nodes, triangles, edges, [WALL] * 6)
    with pytest.raises(MeshError):
        mesh.check_conforming()


def test_build_mesh_invalid(straight_half):
    with pytest.raises(MeshError, match='positive'):
        build_mesh(straight_half, h=0.)
    with pytest.raises(MeshError, match='layers'):
        build_mesh(straight_half, n_layers=2)


def test_channel_mesh():
    mesh = channel_mesh(1.5, 0.3, h=0.1, levels=2)
    mesh.check_conforming()
    assert mesh.area() == pytest.approx(1.)
    distance = np.linalg.norm(mesh.nodes - [-0.5, 0.3], axis=1)
    assert distance.min() < 1e-12
    assert set(mesh.tags()) == {'WALL', 'TRUNCATION_LEFT'}
    with pytest.raises(MeshError):
        channel_mesh(1.5, 1.)


def test_junction_mesh():
    rho, L = 5., 3.
    mesh = junction_mesh(rho, L, h=0.1, levels=2)
    mesh.check_conforming()
    assert set(mesh.tags()) == {'WALL', 'CAP', 'ARC'}
    cap = mesh.nodes[mesh.nodes_with_tag(CAP)]
    np.testing.assert_allclose(cap[:, 0], L)
    arc = mesh.nodes[mesh.nodes_with_tag(ARC)]
    np.testing.assert_allclose(np.linalg.norm(arc, axis=1), rho)
    # polygonal half disk plus the strip
    assert mesh.area() == pytest.approx(np.pi * rho ** 2 / 2 + L, rel=1e-2)
    with pytest.raises(MeshError):
        junction_mesh(1., L)


def _core(mesh, x_core=-1.):
    nodes = mesh.nodes[mesh.nodes[:, 0] >= x_core - 1e-9]
    return nodes[np.lexsort(nodes.T)]


def test_core_independent_of_truncation(one_ligament):
    near = build_mesh(replace(one_ligament, R=1.), h=0.1, junction_refine=2)
    far = build_mesh(replace(one_ligament, R=2.), h=0.1, junction_refine=2)
    np.testing.assert_array_equal(_core(near), _core(far))
    assert far.area() - near.area() == pytest.approx(1.)
    far.check_conforming()
    assert far.quality().min() > 0.3
    # the strip adds no boundary between the two parts
    assert far.tags()['TRUNCATION_LEFT'] == near.tags()['TRUNCATION_LEFT']
    left = far.nodes[far.nodes_with_tag(TRUNCATION_LEFT)]
    np.testing.assert_allclose(left[:, 0], -2.)


@pytest.mark.slow
def test_converter_mesh_quality(critical_spec):
    mesh = build_mesh(critical_spec.to_geometry(), h=0.05)
    assert mesh.quality().min() > 0.2
    mesh.check_conforming()
    assert mesh.info['n_layers'] == 3
