import math

import numpy as np
import pytest

import linalg
import protocols
from exceptions import DegenerateEstimatorError, PhysicalityError, RealizabilityError
from framework import kirkwood_dirac, modular_value, weak_value
from protocols import ModifiedWeak, ProtocolSpec, StrongProjector


def close_to(value, target, tol):
    return abs(value - target) <= tol * max(1.0, abs(target))


# --------------------------
# conventional weak measurement
# --------------------------
@pytest.mark.parametrize("xi, tol", [(1e-3, 5e-3), (1e-4, 1e-3)])
def test_conventional_weak_approaches_anomalous_value(anomalous, xi, tol):
    report = protocols.conventional_weak(*anomalous[:1], xi, *anomalous[1:])
    assert abs(report.estimate - (-2.0)) < tol
    assert report.exact_target == pytest.approx(-2.0)
    assert report.bias == report.estimate - report.exact_target


def test_conventional_weak_bias_shrinks_quadratically(anomalous):
    a, psi_i, psi_f = anomalous
    b1 = protocols.conventional_weak(a, 0.01, psi_i, psi_f).bias
    b2 = protocols.conventional_weak(a, 0.02, psi_i, psi_f).bias
    assert 3.6 <= abs(b2) / abs(b1) <= 4.4
    # closed form for sigma_z on this boundary: -sin(2 xi) / (xi (cos^2 xi + 4 sin^2 xi))
    xi = 0.3
    expected = -math.sin(2 * xi) / (xi * (math.cos(xi) ** 2 + 4 * math.sin(xi) ** 2))
    assert protocols.conventional_weak(a, xi, psi_i, psi_f).estimate == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("xi", [0.01, 0.2, 0.7])
def test_conventional_weak_identity_observable(rng, xi):
    psi_i, psi_f = linalg.random_ket(3, rng), linalg.random_ket(3, rng)
    report = protocols.conventional_weak(linalg.identity(3), xi, psi_i, psi_f)
    assert report.estimate == pytest.approx(math.sin(2 * xi) / (2 * xi), abs=1e-12)


def test_conventional_weak_rejects_non_positive_xi(anomalous):
    a, psi_i, psi_f = anomalous
    with pytest.raises(PhysicalityError) as info:
        protocols.conventional_weak(a, 0.0, psi_i, psi_f)
    assert info.value.field == "xi"


def test_orthogonal_boundary_is_degenerate():
    with pytest.raises(DegenerateEstimatorError):
        protocols.conventional_weak(linalg.SIGMA_Z, 0.1, linalg.KET0, linalg.KET1)
    with pytest.raises(DegenerateEstimatorError):
        protocols.modified_weak(linalg.SIGMA_Z, 1.0, linalg.KET_PLUS, linalg.KET_MINUS)


# --------------------------
# modified weak measurement
# --------------------------
def test_modified_weak_is_exact(anomalous, plus_zero):
    report = protocols.modified_weak(*anomalous[:1], 1.0, *anomalous[1:])
    assert abs(report.estimate - (-2.0)) < 1e-10
    assert abs(report.bias) < 1e-10

    report = protocols.modified_weak(linalg.SIGMA_Z, 1.0, *plus_zero)
    assert report.estimate == pytest.approx(1.0)
    assert report.extras["p0"] == pytest.approx(0.25)


def test_modified_weak_identity_observable(rng):
    psi_i, psi_f = linalg.random_ket(2, rng), linalg.random_ket(2, rng)
    assert protocols.modified_weak(linalg.identity(2), 1.0, psi_i, psi_f).estimate == pytest.approx(1.0)


@pytest.mark.parametrize("xi", [0.05, 0.3, 1.0])
def test_modified_weak_has_no_bias_at_any_realizable_xi(anomalous, xi):
    a, psi_i, psi_f = anomalous
    assert abs(protocols.modified_weak(a, xi, psi_i, psi_f).bias) < 1e-10


def test_modified_weak_rejects_unrealizable_xi(anomalous):
    a, psi_i, psi_f = anomalous
    with pytest.raises(RealizabilityError) as info:
        protocols.modified_weak(a, 2.0, psi_i, psi_f)
    assert info.value.reason().startswith("ERR:3:xi")


# --------------------------
# strong measurements
# --------------------------
def test_strong_projector_examples(plus_zero):
    p0 = linalg.projector(linalg.KET0)
    report = protocols.strong_projector(p0, linalg.KET_PLUS, linalg.KET_PLUS)
    assert report.estimate == pytest.approx(0.5)
    assert report.extras["p1"] == pytest.approx(report.extras["p1_expected"])

    # psi_f inside the projector range: P(0) = 0, only the P(1) route is defined
    report = protocols.strong_projector(p0, *plus_zero)
    assert report.estimate == pytest.approx(1.0)
    assert report.extras["route_p0"] is None
    assert report.extras["p0"] == pytest.approx(0.0, abs=1e-15)


def test_strong_projector_random_qubits(rng):
    for _ in range(50):
        pi = linalg.projector(linalg.random_ket(2, rng))
        psi_i, psi_f = linalg.random_ket(2, rng), linalg.random_ket(2, rng)
        report = protocols.strong_projector(pi, psi_i, psi_f)
        assert close_to(report.estimate, weak_value(pi, psi_i, psi_f), 1e-9)
        assert report.extras["p1"] == pytest.approx(report.extras["p1_expected"], abs=1e-12)


def test_strong_projector_needs_projector(plus_zero):
    with pytest.raises(PhysicalityError) as info:
        ProtocolSpec(StrongProjector(), linalg.SIGMA_Z, *plus_zero)
    assert info.value.field == "observable"


def test_strong_pauli_examples(anomalous, plus_zero):
    assert protocols.strong_pauli("z", *plus_zero).estimate == pytest.approx(1.0)
    assert protocols.strong_pauli("z", *anomalous[1:]).estimate == pytest.approx(-2.0)
    assert protocols.strong_pauli("x", linalg.KET0, linalg.KET_PLUS).estimate == pytest.approx(1.0)
    assert protocols.strong_pauli("Y", linalg.KET0, linalg.KET_PLUS).estimate == pytest.approx(1j)


def test_strong_pauli_rejects_unknown_axis(plus_zero):
    with pytest.raises(PhysicalityError) as info:
        protocols.strong_pauli("w", *plus_zero)
    assert info.value.field == "axis"


# --------------------------
# modular value
# --------------------------
def test_modular_protocol_at_zero_coupling(anomalous):
    a, psi_i, psi_f = anomalous
    assert protocols.modular_protocol(a, 0.0, psi_i, psi_f).estimate == pytest.approx(1.0)


def test_modular_protocol_at_half_pi_is_weak_value(anomalous):
    a, psi_i, psi_f = anomalous
    report = protocols.modular_protocol(a, math.pi / 2, psi_i, psi_f)
    assert report.estimate == pytest.approx(-1j * -2.0)


def test_modular_protocol_random_hermitian(rng):
    for d in (2, 3, 4):
        a = linalg.random_hermitian(d, rng)
        psi_i, psi_f = linalg.random_ket(d, rng), linalg.random_ket(d, rng)
        report = protocols.modular_protocol(a, 0.7, psi_i, psi_f)
        assert close_to(report.estimate, modular_value(a, 0.7, psi_i, psi_f), 1e-10)
        assert abs(report.bias) < 1e-10 * max(1.0, abs(report.exact_target))


def test_modular_value_first_order_expansion(rng):
    a = linalg.random_hermitian(3, rng)
    psi_i, psi_f = linalg.random_ket(3, rng), linalg.random_ket(3, rng)
    w = weak_value(a, psi_i, psi_f)
    second = weak_value(a @ a, psi_i, psi_f)
    for xi in (1e-2, 1e-3):
        m = protocols.modular_protocol(a, xi, psi_i, psi_f).estimate
        assert abs((1 - m) / (1j * xi) - w) <= xi * max(1.0, abs(second))


# --------------------------
# expanded Hilbert space
# --------------------------
def test_expanded_hilbert_resolved_values(plus_zero):
    report = protocols.expanded_hilbert(linalg.SIGMA_Z, *plus_zero)
    assert report.estimate == pytest.approx(1.0)
    (c0_re, c0_im), (c1_re, c1_im) = report.extras["c_values"]
    assert complex(c0_re, c0_im) == pytest.approx(1 / math.sqrt(2))
    assert abs(complex(c1_re, c1_im)) < 1e-12


def test_expanded_hilbert_examples(rng, anomalous):
    assert abs(protocols.expanded_hilbert(*anomalous).estimate - (-2.0)) < 1e-10
    psi_i, psi_f = linalg.random_ket(3, rng), linalg.random_ket(3, rng)
    assert protocols.expanded_hilbert(linalg.identity(3), psi_i, psi_f).estimate == pytest.approx(1.0)


def test_expanded_hilbert_degenerate_observable(rng):
    psi_i, psi_f = linalg.random_ket(3, rng), linalg.random_ket(3, rng)
    v = linalg.random_unitary(3, rng)
    a = (v * np.array([2.0, 2.0, -1.0])) @ v.conj().T
    report = protocols.expanded_hilbert(a, psi_i, psi_f)
    assert len(report.extras["c_values"]) == 2
    assert close_to(report.estimate, weak_value(a, psi_i, psi_f), 1e-9)

    # another eigenbasis of the same operator gives the same estimate
    w = linalg.random_unitary(2, rng)
    rotation = np.eye(3, dtype=complex)
    rotation[:2, :2] = w
    v2 = v @ rotation
    a2 = (v2 * np.array([2.0, 2.0, -1.0])) @ v2.conj().T
    assert abs(protocols.expanded_hilbert(a2, psi_i, psi_f).estimate - report.estimate) < 1e-9


# --------------------------
# cross-protocol agreement
# --------------------------
@pytest.mark.parametrize("d", [2, 3])
def test_protocols_agree_on_random_instances(rng, d):
    for _ in range(50):
        a = linalg.random_hermitian(d, rng)
        psi_i, psi_f = linalg.random_ket(d, rng), linalg.random_ket(d, rng)
        target = weak_value(a, psi_i, psi_f)

        xi = 1.0 / float(np.max(np.abs(linalg.herm_eig(a)[0])))
        assert ProtocolSpec(ModifiedWeak(xi), a, psi_i, psi_f).a_max * xi == pytest.approx(1.0)
        assert close_to(protocols.modified_weak(a, xi, psi_i, psi_f).estimate, target, 1e-9)
        assert close_to(protocols.expanded_hilbert(a, psi_i, psi_f).estimate, target, 1e-9)

        pi = linalg.projector(linalg.random_ket(d, rng))
        assert close_to(protocols.strong_projector(pi, psi_i, psi_f).estimate, weak_value(pi, psi_i, psi_f), 1e-9)

        if d == 2:
            for axis, sigma in linalg.PAULIS.items():
                assert close_to(protocols.strong_pauli(axis, psi_i, psi_f).estimate, weak_value(sigma, psi_i, psi_f), 1e-9)


def test_success_probabilities_stay_in_unit_interval(rng):
    for _ in range(30):
        a = linalg.random_hermitian(2, rng)
        psi_i, psi_f = linalg.random_ket(2, rng), linalg.random_ket(2, rng)
        xi = float(rng.uniform(0.01, 1.0))
        for report in (
            protocols.conventional_weak(a, xi, psi_i, psi_f),
            protocols.modular_protocol(a, xi, psi_i, psi_f),
            protocols.expanded_hilbert(a, psi_i, psi_f),
        ):
            assert 0.0 <= report.success_probability <= 1.0


# --------------------------
# Kirkwood-Dirac
# --------------------------
def test_kd_protocol_examples():
    rho = linalg.projector(linalg.KET0)
    assert protocols.kd_protocol(rho, linalg.KET0, linalg.KET_PLUS) == pytest.approx(0.5)
    assert abs(protocols.kd_protocol(rho, linalg.KET1, linalg.KET_PLUS_I)) < 1e-15


def test_kd_grid_over_mutually_unbiased_bases(rng):
    rho = linalg.random_density(2, rng)
    z_basis = linalg.identity(2)
    x_basis = np.column_stack([linalg.KET_PLUS, linalg.KET_MINUS])
    grid = protocols.kd_grid_protocol(rho, z_basis, x_basis)
    assert abs(grid.sum() - 1) < 1e-12
    assert np.allclose(grid, kirkwood_dirac(rho, z_basis, x_basis), atol=1e-12)


def test_kd_grid_fourier_basis(rng):
    d = 4
    rho = linalg.random_density(d, rng)
    a_basis = linalg.identity(d)
    b_basis = linalg.dagger(linalg.dft_matrix(d))
    grid = protocols.kd_grid_protocol(rho, a_basis, b_basis)
    assert np.allclose(grid, kirkwood_dirac(rho, a_basis, b_basis), atol=1e-12)


def test_kd_weak_route_matches_framework_run(rng):
    rho = linalg.random_density(3, rng)
    ket_a, ket_b = linalg.random_ket(3, rng), linalg.random_ket(3, rng)
    assert abs(protocols.kd_weak_route(rho, ket_a, ket_b) - protocols.kd_protocol(rho, ket_a, ket_b)) < 1e-12


def test_kd_distribution_is_valid(rng):
    rho = linalg.random_density(3, rng)
    spec = ProtocolSpec(protocols.KirkwoodDirac(linalg.random_ket(3, rng), linalg.random_ket(3, rng)), rho_in=rho)
    protocols.exact_distribution(spec).validate()
    assert protocols.exact_target(spec) == pytest.approx(protocols.invert(spec, protocols.exact_distribution(spec))[0])


def test_report_json_shape(anomalous):
    doc = protocols.modified_weak(*anomalous[:1], 1.0, *anomalous[1:]).to_json_dict()
    assert doc["protocol"] == "modified_weak"
    assert doc["estimate"] == pytest.approx([-2.0, 0.0], abs=1e-10)
    assert set(doc["shots_used"]) == {"X", "Y", "Z"}
    assert "simulator" in doc["bias_note"]
