import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (Z, cnot_matrix, dense_expectations, dense_state, on_qubit, rot)
from stvsa.quantum import (CircuitError, CircuitSpec, StateVector, VariationalBlock, angle_encode,
                           apply_cnot, apply_rotation, circuit_jacobian, pauli_z_expectations,
                           run_batch, run_circuit, variational_layer)


def basis(n_total, bits):
    s = StateVector(n_total)
    s.amps[:] = 0
    s.amps[0, int(bits, 2)] = 1.0
    return s


def random_state(n_total, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2 ** n_total) + 1j * rng.normal(size=2 ** n_total)
    s = StateVector(n_total)
    s.amps[0] = v / np.linalg.norm(v)
    return s


def z_of(state, qubit):
    return float(np.real(np.conj(state.vector) @ on_qubit(Z, qubit, state.n_total) @ state.vector))


# -- single gates -------------------------------------------------------------------

def test_rx_zero_identity():
    s = random_state(3, 0)
    before = s.vector.copy()
    apply_rotation(s, 1, "X", 0.0)
    np.testing.assert_array_equal(s.vector, before)


def test_rx_pi_flips_z():
    s = apply_rotation(StateVector(1), 0, "X", np.pi)
    assert z_of(s, 0) == pytest.approx(-1.0, abs=1e-12)


def test_ry_half_pi_zero_z():
    s = apply_rotation(StateVector(1), 0, "Y", np.pi / 2)
    assert abs(z_of(s, 0)) <= 1e-12


def test_rotation_bad_qubit():
    with pytest.raises(CircuitError):
        apply_rotation(StateVector(2), 2, "X", 0.1)


def test_rotation_nonfinite_angle():
    with pytest.raises(CircuitError):
        apply_rotation(StateVector(2), 0, "Y", np.nan)


@pytest.mark.parametrize("n_total", [1, 2, 3])
@pytest.mark.parametrize("axis", ["X", "Y", "Z"])
def test_rotation_matches_dense(n_total, axis):
    rng = np.random.default_rng(n_total)
    for q in range(n_total):
        s = random_state(n_total, q + 10)
        theta = rng.uniform(-np.pi, np.pi)
        want = on_qubit(rot(axis, theta), q, n_total) @ s.vector
        apply_rotation(s, q, axis, theta)
        np.testing.assert_allclose(s.vector, want, atol=1e-12)


def test_cnot_basis_examples():
    np.testing.assert_array_equal(apply_cnot(basis(2, "00"), 0, 1).vector, basis(2, "00").vector)
    np.testing.assert_array_equal(apply_cnot(basis(2, "10"), 0, 1).vector, basis(2, "11").vector)


def test_cnot_equal_indices():
    with pytest.raises(CircuitError):
        apply_cnot(StateVector(2), 1, 1)


@pytest.mark.parametrize("n_total", [2, 3])
def test_cnot_matches_dense_and_self_inverse(n_total):
    for c in range(n_total):
        for t in range(n_total):
            if c == t:
                continue
            s = random_state(n_total, 7 * c + t)
            v0 = s.vector.copy()
            apply_cnot(s, c, t)
            np.testing.assert_allclose(s.vector, cnot_matrix(c, t, n_total) @ v0, atol=1e-12)
            apply_cnot(s, c, t)
            np.testing.assert_allclose(s.vector, v0, atol=1e-12)


def test_bell_state():
    s = StateVector(2)
    apply_rotation(s, 0, "X", np.pi)
    apply_rotation(s, 0, "Y", np.pi / 2)   # H up to a global phase
    apply_cnot(s, 0, 1)
    np.testing.assert_allclose(np.abs(s.vector) ** 2, [0.5, 0, 0, 0.5], atol=1e-12)
    assert abs(z_of(s, 0)) < 1e-12 and abs(z_of(s, 1)) < 1e-12


def test_norm_preserved_over_long_random_sequence():
    rng = np.random.default_rng(11)
    s = StateVector(4)
    for _ in range(1000):
        if rng.random() < 0.3:
            c, t = rng.choice(4, 2, replace=False)
            apply_cnot(s, int(c), int(t))
        else:
            apply_rotation(s, int(rng.integers(4)), "XYZ"[rng.integers(3)], rng.uniform(-7, 7))
    assert abs(s.norm() - 1.0) <= 1e-12


# -- encoding / layers / readout ------------------------------------------------------

def test_encode_zero_features():
    s = angle_encode(StateVector(4), np.zeros(3))
    np.testing.assert_array_equal(s.vector, StateVector(4).vector)


def test_encode_pi_on_first():
    s = angle_encode(StateVector(4), [np.pi, 0, 0])
    np.testing.assert_allclose(pauli_z_expectations(s), [-1, 1, 1], atol=1e-12)


def test_encode_length_mismatch():
    with pytest.raises(CircuitError):
        angle_encode(StateVector(3), [0.1, 0.2, 0.3])


def test_encode_two_qubits_dense():
    f = np.random.default_rng(2).uniform(-2, 2, 2)
    s = angle_encode(StateVector(3), f)
    want = on_qubit(rot("X", f[1]), 1, 3) @ on_qubit(rot("X", f[0]), 0, 3) @ StateVector(3).vector
    np.testing.assert_allclose(s.vector, want, atol=1e-12)


def test_layer_zero_angles_identity():
    s = variational_layer(StateVector(4), np.zeros(4))
    np.testing.assert_array_equal(np.abs(s.vector), np.abs(StateVector(4).vector))


def test_layer_pi_matches_dense():
    s = variational_layer(StateVector(3), [np.pi, 0, 0])
    want = dense_state(2, np.array([[np.pi, 0, 0]]), np.zeros(2))
    np.testing.assert_allclose(s.vector, want, atol=1e-12)
    assert abs(s.norm() - 1) <= 1e-12


def test_readout_examples():
    np.testing.assert_array_equal(pauli_z_expectations(StateVector(4)), [1, 1, 1])
    np.testing.assert_array_equal(pauli_z_expectations(basis(4, "1000")), [-1, 1, 1])
    # auxiliary qubit is never measured
    np.testing.assert_array_equal(pauli_z_expectations(basis(3, "001")), [1, 1])


# -- full circuit ---------------------------------------------------------------------

def test_run_circuit_trivial():
    spec = CircuitSpec(3, 2)
    np.testing.assert_array_equal(run_circuit(spec, np.zeros(spec.param_shape), np.zeros(3)), [1, 1, 1])


@pytest.mark.parametrize("n,layers,seed", [(2, 1, 0), (2, 3, 1), (3, 2, 2), (4, 4, 3)])
def test_run_circuit_dense_oracle(n, layers, seed):
    rng = np.random.default_rng(seed)
    spec = CircuitSpec(n, layers)
    theta = rng.uniform(-np.pi, np.pi, spec.param_shape)
    f = rng.uniform(-np.pi, np.pi, n)
    np.testing.assert_allclose(run_circuit(spec, theta, f), dense_expectations(n, theta, f), atol=1e-12)


def test_run_circuit_pure_and_bounded():
    rng = np.random.default_rng(4)
    spec = CircuitSpec(4, 3)
    theta, f = rng.normal(size=spec.param_shape) * 3, rng.normal(size=4) * 3
    a, b = run_circuit(spec, theta, f), run_circuit(spec, theta, f)
    np.testing.assert_array_equal(a, b)
    assert np.all(np.abs(a) <= 1 + 1e-12)


def test_run_circuit_param_shape_error():
    with pytest.raises(CircuitError):
        run_circuit(CircuitSpec(2, 2), np.zeros((2, 2)), np.zeros(2))


def test_spec_validation():
    with pytest.raises(CircuitError):
        CircuitSpec(1, 1)
    with pytest.raises(CircuitError):
        CircuitSpec(2, 0)
    assert CircuitSpec(4, 4).n_total == 5


def test_run_batch_matches_single():
    rng = np.random.default_rng(5)
    spec = CircuitSpec(3, 2)
    thetas = rng.normal(size=(6, *spec.param_shape))
    feats = rng.normal(size=(6, 3))
    out = run_batch(spec, thetas, feats)
    for i in range(6):
        np.testing.assert_allclose(out[i], run_circuit(spec, thetas[i], feats[i]), atol=1e-13)


# -- gradients ------------------------------------------------------------------------

def test_single_rx_derivative():
    # n=2, theta=0: the two ring CNOTs move qubit 0's excitation onto qubit 1, so <Z_1> = cos(f_0)
    spec = CircuitSpec(2, 1)
    np.testing.assert_allclose(run_circuit(spec, np.zeros(spec.param_shape), [0.7, 0.0]),
                               [1.0, np.cos(0.7)], atol=1e-12)
    _, d_feat = circuit_jacobian(spec, np.zeros(spec.param_shape), [np.pi / 2, 0.0])
    assert d_feat[1, 0] == pytest.approx(-1.0, abs=1e-12)
    _, d_feat0 = circuit_jacobian(spec, np.zeros(spec.param_shape), [0.0, 0.0])
    assert abs(d_feat0[1, 0]) <= 1e-12


def _fd_jacobian(spec, theta, f, h=1e-6):
    dt = np.zeros((spec.n_qubits, *spec.param_shape))
    for idx in np.ndindex(spec.param_shape):
        tp, tm = theta.copy(), theta.copy()
        tp[idx] += h
        tm[idx] -= h
        dt[(slice(None), *idx)] = (run_circuit(spec, tp, f) - run_circuit(spec, tm, f)) / (2 * h)
    df = np.zeros((spec.n_qubits, spec.n_qubits))
    for j in range(spec.n_qubits):
        fp, fm = f.copy(), f.copy()
        fp[j] += h
        fm[j] -= h
        df[:, j] = (run_circuit(spec, theta, fp) - run_circuit(spec, theta, fm)) / (2 * h)
    return dt, df


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 4), st.integers(1, 4), st.integers(0, 2 ** 31))
def test_shift_rule_matches_finite_difference(n, layers, seed):
    rng = np.random.default_rng(seed)
    spec = CircuitSpec(n, layers)
    theta = rng.uniform(-np.pi, np.pi, spec.param_shape)
    f = rng.uniform(-np.pi, np.pi, n)
    dt, df = circuit_jacobian(spec, theta, f)
    ft, ff = _fd_jacobian(spec, theta, f)
    np.testing.assert_allclose(dt, ft, atol=1e-7)
    np.testing.assert_allclose(df, ff, atol=1e-7)


def test_last_aux_angle_has_no_effect_on_main_readout():
    # the final aux rotation happens after every gate touching the main register;
    # earlier aux angles do matter because they set the back-action of the next aux CNOT
    rng = np.random.default_rng(6)
    spec = CircuitSpec(3, 3)
    dt, _ = circuit_jacobian(spec, rng.normal(size=spec.param_shape), rng.normal(size=3))
    np.testing.assert_allclose(dt[:, -1, -1], 0.0, atol=1e-12)
    assert np.abs(dt[:, :-1, -1]).max() > 1e-3


@pytest.mark.parametrize("n,layers", [(2, 1), (3, 2), (4, 4)])
def test_block_adjoint_vjp_matches_shift_jacobian(n, layers):
    rng = np.random.default_rng(n * 10 + layers)
    spec = CircuitSpec(n, layers)
    theta = rng.uniform(-np.pi, np.pi, spec.param_shape)
    feats = rng.uniform(-2, 2, (5, n))
    g = rng.normal(size=(5, n))
    blk = VariationalBlock(spec, theta, with_shifts=True, with_generators=True)
    np.testing.assert_allclose(blk.expectations(feats), run_batch(spec, np.broadcast_to(theta, (5, *spec.param_shape)), feats), atol=1e-12)
    gf, gt = blk.vjp(feats, g)
    want_t = np.zeros(spec.param_shape)
    want_f = np.zeros((5, n))
    for m in range(5):
        dt, df = circuit_jacobian(spec, theta, feats[m])
        want_t += np.tensordot(g[m], dt, axes=1)
        want_f[m] = g[m] @ df
    np.testing.assert_allclose(gt, want_t, atol=1e-10)
    np.testing.assert_allclose(gf, want_f, atol=1e-10)
    np.testing.assert_allclose(blk.theta_vjp(feats, g), want_t, atol=1e-10)
    np.testing.assert_allclose(np.einsum("mj,mjk->mk", g, blk.feature_jacobian(feats)), want_f, atol=1e-10)


@pytest.mark.parametrize("n,layers", [(2, 1), (3, 3)])
def test_block_gatewise_fallback_matches_dense(n, layers):
    rng = np.random.default_rng(7 + n)
    spec = CircuitSpec(n, layers)
    theta = rng.uniform(-np.pi, np.pi, spec.param_shape)
    feats = rng.uniform(-2, 2, (6, n))
    g = rng.normal(size=(6, n))
    dense = VariationalBlock(spec, theta, with_shifts=True, with_generators=True)
    lean = VariationalBlock(spec, theta, with_shifts=True, with_generators=True, max_dense_bytes=0)
    assert dense.dense and not lean.dense and lean.generators is None and lean.shifted is None
    for a, b in zip(dense.vjp(feats, g), lean.vjp(feats, g)):
        np.testing.assert_allclose(b, a, atol=1e-10)
    np.testing.assert_allclose(lean.theta_vjp(feats, g), dense.theta_vjp(feats, g), atol=1e-10)
    np.testing.assert_allclose(lean.feature_jacobian(feats, chunk=4), dense.feature_jacobian(feats), atol=1e-12)


def test_block_ten_qubits_stays_lean():
    spec = CircuitSpec(10, 6)
    blk = VariationalBlock(spec, np.zeros(spec.param_shape), with_generators=True)
    assert not blk.dense and blk.generators is None and blk.unitary is None
    feats = np.random.default_rng(0).uniform(-1, 1, (3, 10))
    np.testing.assert_allclose(blk.expectations(feats), run_batch(spec, np.zeros(spec.param_shape), feats), atol=1e-12)


def test_block_mode_follows_batch_size():
    spec = CircuitSpec(7, 2)
    theta = np.zeros(spec.param_shape)
    assert not VariationalBlock(spec, theta, with_generators=True, n_rows=32).dense
    assert VariationalBlock(spec, theta, with_generators=True, n_rows=4096).dense
    assert VariationalBlock(CircuitSpec(4, 4), np.zeros((4, 5)), with_generators=True, n_rows=16).dense


def test_block_without_generators_refuses_vjp():
    spec = CircuitSpec(2, 1)
    blk = VariationalBlock(spec, np.zeros(spec.param_shape))
    with pytest.raises(CircuitError):
        blk.vjp(np.zeros((1, 2)), np.zeros((1, 2)))
