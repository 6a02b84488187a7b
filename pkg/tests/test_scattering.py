import numpy as np
import pytest

from modeconv.constants import AsymptoticConstants
from modeconv.design import design, length_correction, predict_half_matrices
from modeconv.geometry import LigamentSpec, WaveguideGeometry
from modeconv.scattering import (DecompositionError, ScatteringError,
                                 ScatteringMatrices, decompose,
                                 full_scattering, half_scattering, max_norm,
                                 verify_decomposition)

ANTI = np.array([[0, 1], [1, 0]])
C_XI = (1 + np.log(np.pi / 2)) / np.pi


def test_straight_full(straight_full, omega):
    matrices = full_scattering(straight_full, omega, h=0.1)
    assert max_norm(matrices.R) < 1e-2
    np.testing.assert_allclose(matrices.T, np.eye(2), atol=1e-2)
    assert matrices.energy_defect() < 1e-2
    assert matrices.metadata['ligament_fields'] == []
    assert matrices.metadata['residual'] < 1e-8


@pytest.mark.parametrize('abc, expected', [
    ('neumann', np.eye(2)),
    ('D', -np.eye(2)),
])
def test_straight_half(straight_half, omega, abc, expected):
    matrices = half_scattering(straight_half, omega, abc, h=0.1)
    assert matrices.T is None
    np.testing.assert_allclose(matrices.R, expected, atol=1e-2)


def test_half_unknown_condition(straight_half, omega):
    with pytest.raises(ScatteringError, match='Neumann or Dirichlet'):
        half_scattering(straight_half, omega, 'robin')


def test_dtn_placement_invariance(omega):
    near = half_scattering(WaveguideGeometry.straight(R=1.5), omega, 'N',
                           h=0.1)
    far = half_scattering(WaveguideGeometry.straight(R=2.5), omega, 'N',
                          h=0.1)
    np.testing.assert_allclose(near.R, far.R, atol=1e-3)


def test_scattering_matrices():
    matrices = ScatteringMatrices('full', 0.6 * ANTI, 0.8j * np.eye(2))
    np.testing.assert_allclose(matrices.energy_rows(), [1, 1])
    assert matrices.energy_defect() == pytest.approx(0., abs=1e-15)
    assert matrices.reciprocity_defect() == 0.
    names = [name for name, _ in matrices.entries()]
    assert names == ['r11', 'r12', 'r21', 'r22', 't11', 't12', 't21', 't22']
    out = matrices.to_dict()
    assert out['t11'] == [0., 0.8]
    with pytest.raises(ScatteringError, match='Unknown scattering problem'):
        ScatteringMatrices('quarter', np.eye(2))


def test_verify_decomposition_synthetic():
    R_N = np.array([[0.1j, 0.9], [0.9, -0.2]])
    R_D = np.array([[0.3, -0.8j], [-0.8j, 0.1]])
    report = verify_decomposition((R_N + R_D) / 2, (R_N - R_D) / 2, R_N, R_D)
    assert report.residual_R == pytest.approx(0.)
    assert report.passed(1e-12)
    report = verify_decomposition(np.zeros((2, 2)), np.eye(2), R_N, R_D)
    assert not report.passed(0.1)
    assert report.to_dict()['norm'] == 'entrywise max modulus'
    with pytest.raises(DecompositionError, match='2x2'):
        verify_decomposition(np.zeros(3), np.eye(2), R_N, R_D)


def test_verify_decomposition_incomparable():
    base = {'omega': 1.5 * np.pi, 'h': 0.05, 'signature': [0.05, 3, 3, 10]}
    full = ScatteringMatrices('full', np.zeros((2, 2)), np.eye(2),
                              metadata=base)
    neumann = ScatteringMatrices('neumann', np.eye(2), metadata=base)
    dirichlet = ScatteringMatrices('dirichlet', -np.eye(2),
                                   metadata=dict(base, h=0.1))
    with pytest.raises(DecompositionError, match='incomparable runs: h'):
        verify_decomposition(full, full, neumann, dirichlet)


def test_decompose_straight(straight_full, omega):
    runs, report = decompose(straight_full, omega, h=0.1)
    assert set(runs) == {'full', 'neumann', 'dirichlet'}
    assert report.passed(1e-2)


@pytest.mark.slow
def test_decompose_ligaments(critical_spec, omega):
    geometry = critical_spec.to_geometry()
    runs, report = decompose(geometry, omega, h=0.05, workers=3)
    assert report.passed(1e-3)
    full = runs['full']
    assert full.energy_defect() < 1e-2
    assert full.reciprocity_defect() < 1e-2
    assert runs['neumann'].energy_defect() < 1e-2
    assert len(full.metadata['ligament_fields']) == 2


@pytest.mark.slow
def test_tuned_converter(tuned_spec, omega):
    geometry = tuned_spec.to_geometry()
    neumann = half_scattering(geometry, omega, 'N', h=0.05)
    dirichlet = half_scattering(geometry, omega, 'D', h=0.05)
    assert max_norm(neumann.R - ANTI) < 0.05
    assert max_norm(dirichlet.R + ANTI) < 0.05
    report = verify_decomposition((neumann.R + dirichlet.R) / 2,
                                  (neumann.R - dirichlet.R) / 2,
                                  neumann, dirichlet)
    assert max_norm(report.T - ANTI) < 0.05
    assert max_norm(report.R) < 0.05


@pytest.mark.slow
def test_straight_full_fine(straight_full, omega):
    matrices = full_scattering(straight_full, omega, h=0.02)
    assert max_norm(matrices.R) <= 1e-4
    assert abs(matrices.T[0, 0] - 1) <= 1e-4
    assert abs(matrices.T[1, 1] - 1) <= 1e-4


def test_mesh_convergence_order(straight_full, omega):
    errors = []
    for h in (0.2, 0.1, 0.05):
        matrices = full_scattering(straight_full, omega, h=h)
        errors.append(max(max_norm(matrices.R),
                          max_norm(matrices.T - np.eye(2))))
    orders = np.log2(np.array(errors[:-1]) / np.array(errors[1:]))
    assert np.all(orders >= 2.5)


@pytest.mark.slow
def test_dtn_placement_with_ligament(one_ligament, omega):
    from dataclasses import replace
    near = half_scattering(replace(one_ligament, R=1.), omega, 'N',
                           h=0.025)
    far = half_scattering(replace(one_ligament, R=2.), omega, 'N', h=0.025)
    assert max_norm(near.R - far.R) < 1e-6


@pytest.mark.slow
def test_untuned_converter(critical_spec, omega):
    geometry = critical_spec.to_geometry(ell_minus=1.02,
                                         ell_plus=4 / 3 + 0.02)
    matrices = full_scattering(geometry, omega)
    assert 0.93 <= abs(matrices.R[0, 0]) <= 1.
    assert max_norm(matrices.T) <= 0.2
    # almost all the energy is reflected
    assert abs(matrices.R[0, 0]) == pytest.approx(abs(0.98 - 0.09j),
                                                  abs=0.05)
    assert matrices.energy_defect() < 1e-3


@pytest.mark.slow
def test_tuned_full_problem(tuned_full):
    assert max_norm(tuned_full.R) <= 0.02
    np.testing.assert_allclose(tuned_full.T, ANTI, atol=0.02)
    assert tuned_full.reciprocity_defect() < 1e-3
    assert tuned_full.energy_defect() < 1e-3


@pytest.mark.slow
def test_tuned_wide_ligaments(tuned_spec, omega):
    constants = AsymptoticConstants.from_dict(tuned_spec.constants_used)
    spec = design(omega, 0.1, constants=constants)
    # the cosine arch is too tight for ε = 0.1
    matrices = full_scattering(spec.to_geometry(shape='arc'), omega)
    assert abs(matrices.T[0, 1]) >= 0.99
    assert max_norm(matrices.R) <= 0.07


@pytest.mark.slow
def test_ligament_amplitude(tuned_spec, tuned_full, omega):
    fields = tuned_full.metadata['ligament_fields'][0]
    assert 15 <= fields['max_abs_im'] <= 32
    assert 0.4 <= fields['max_abs_re'] <= 1.2

    constants = AsymptoticConstants.from_dict(tuned_spec.constants_used)
    wider = full_scattering(
        design(omega, 0.02, constants=constants).to_geometry(), omega)
    ratio = wider.metadata['ligament_fields'][0]['max_abs_im'] / \
        fields['max_abs_im']
    assert ratio == pytest.approx(0.5, rel=0.3)


@pytest.mark.slow
@pytest.mark.parametrize('y, row', [(0.25, 0), (0.5, 1)])
def test_half_problem_leading_order(gamma_oracle, omega, y, row):
    length = 1 - length_correction(0.01, C_XI, gamma_oracle(y, omega))
    ligament = LigamentSpec(y_attach=y, length=length, width=0.01,
                            bend_sign=1)
    geometry = WaveguideGeometry(ligaments=(ligament,), domain='half')
    matrices = half_scattering(geometry, omega, 'N')
    expected, _ = predict_half_matrices(omega, y, 'N')
    np.testing.assert_allclose(matrices.R[row], expected[row], atol=0.1)
