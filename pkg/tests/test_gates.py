import numpy as np
import pytest
from hypothesis import given, strategies as st

from qudit_photonics import gates
from qudit_photonics.hilbert import ModeBasis, StateVector, equal_up_to_global_phase


def basis_vec(d, l):
    v = np.zeros(d)
    v[l] = 1
    return v


def test_x4_shifts_level_zero():
    assert np.array_equal(gates.pauli_x(4).matrix @ basis_vec(4, 0), basis_vec(4, 1))


def test_x4_cubed_is_inverse():
    x = gates.pauli_x(4).matrix
    assert np.allclose(np.linalg.matrix_power(x, 3), x.conj().T)
    assert np.array_equal(gates.pauli_x(4, 3).matrix, gates.pauli_x(4, -1).matrix)


def test_z4_values():
    assert np.allclose(gates.pauli_z(4).matrix, np.diag([1, 1j, -1, -1j]))
    z = gates.pauli_z(4).matrix
    assert np.allclose(gates.pauli_z(4, 3).matrix, z.conj().T)


def test_z_phases_are_exact_for_quarter_turns():
    z = gates.pauli_z(4, 2).matrix
    assert np.abs(z - np.diag([1, -1, 1, -1])).max() < 1e-15


@pytest.mark.parametrize("d", range(2, 8))
def test_commutation_and_order(d):
    x, z = gates.pauli_x(d).matrix, gates.pauli_z(d).matrix
    assert np.abs(z @ x - gates.omega(d) * x @ z).max() < 1e-12
    assert np.abs(np.linalg.matrix_power(x, d) - np.eye(d)).max() < 1e-12
    assert np.abs(np.linalg.matrix_power(z, d) - np.eye(d)).max() < 1e-12


@given(st.integers(2, 8), st.integers(-20, 20), st.integers(-20, 20))
def test_group_closure(d, a, b):
    assert np.allclose(gates.pauli_x(d, a).matrix @ gates.pauli_x(d, b).matrix, gates.pauli_x(d, a + b).matrix)
    assert np.allclose(gates.pauli_z(d, a).matrix @ gates.pauli_z(d, b).matrix, gates.pauli_z(d, a + b).matrix,
                       atol=1e-12)


def test_y_examples():
    y = np.array([[0, -1j], [1j, 0]])
    assert equal_up_to_global_phase(y, gates.pauli_y(2, 1))
    assert np.allclose(gates.pauli_y(4, 0).matrix, np.eye(4))
    assert np.allclose(gates.pauli_y(4, 1).matrix @ basis_vec(4, 0), basis_vec(4, 1))


def test_gate_spec_reduces_power_and_validates():
    assert gates.GateSpec(4, 7, "X").n == 3
    assert np.allclose(gates.GateSpec(4, 0, "Z").operator().matrix, np.eye(4))
    with pytest.raises(ValueError):
        gates.GateSpec(1, 1, "X")
    with pytest.raises(ValueError):
        gates.GateSpec(4, 1, "W")


def _cx_apply(op, d, k, l):
    col = op.matrix[:, k * d + l]
    idx = int(np.argmax(np.abs(col)))
    return divmod(idx, d)


def test_cx_qudit_examples():
    cx = gates.cx_qudit(4, 1)
    assert _cx_apply(cx, 4, 1, 2) == (1, 3)
    for l in range(4):
        assert _cx_apply(cx, 4, 0, l) == (0, l)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.array_equal(gates.cx_qudit(2, 1).matrix, cnot)


@pytest.mark.parametrize("d", range(2, 6))
def test_cx_qudit_power_semantics_differ_from_repetition(d):
    cx1 = gates.cx_qudit(d, 1).matrix
    twice = cx1 @ cx1
    for k in range(d):
        for l in range(d):
            out = divmod(int(np.argmax(np.abs(twice[:, k * d + l]))), d)
            assert out == (k, (l + 2 * k) % d)
    # the literal offset term makes the two-fold power a different permutation
    assert not np.array_equal(twice, gates.cx_qudit(d, 2).matrix)


def test_cx_hybrid_blocks():
    for n in range(4):
        u = gates.cx_hybrid(n)
        assert np.array_equal(u.restrict(["Ha", "Hb", "Hc", "Hd"]).matrix, gates.pauli_x(4, n).matrix)
        assert np.array_equal(u.restrict(["Va", "Vb", "Vc", "Vd"]).matrix, np.eye(4))


def test_ideal_gate_dimensions():
    assert gates.ideal_gate("X4").basis.dim == 4
    assert gates.ideal_gate("CX4_dag").basis.dim == 8
    with pytest.raises(ValueError):
        gates.ideal_gate("Y4")


def test_classical_bound():
    assert gates.classical_bound() == 0.4982
    assert "quoted" in gates.CLASSICAL_BOUND_NOTE


def test_ideal_truth_tables_are_one_hot():
    tt = gates.truth_table(gates.pauli_x(4))
    assert np.array_equal(tt.probabilities, gates.pauli_x(4).matrix.T)
    assert tt.average_efficiency() == 1 and tt.max_off_target() == 0
    cx = gates.truth_table(gates.cx_hybrid(1), ModeBasis.hybrid().labels)
    assert cx.input_labels == ModeBasis.hybrid().labels
    assert cx.targets[4:] == ("Hb", "Hc", "Hd", "Ha")


@given(st.integers(0, 2**32 - 1))
def test_truth_table_rows_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5)))
    tt = gates.truth_table(gates.Operator(ModeBasis.qudit(5), q))
    assert np.abs(tt.probabilities.sum(axis=1) - 1).max() < 1e-12


def test_truth_table_from_counts():
    tt = gates.TruthTable.from_counts(["0", "1"], ["0", "1"], [[990, 10], [5, 995]], ["0", "1"])
    assert np.allclose(tt.efficiencies(), [0.99, 0.995])
    assert tt.max_off_target() == pytest.approx(0.01)
    assert tt.to_dict()["counts"] == [[990, 10], [5, 995]]
    assert tt.csv_rows()[0] == ["input", "0", "1"]
    with pytest.raises(ValueError):
        gates.TruthTable.from_counts(["0"], ["0"], [[0]], ["0"])


def test_polarization_insensitive_detectors():
    groups = gates.detector_groups(ModeBasis.hybrid(), resolve_polarization=False)
    assert [g[0] for g in groups] == ["a", "b", "c", "d"]
    assert groups[0][1] == [0, 4]


def test_truth_table_requires_unitary():
    with pytest.raises(ValueError):
        gates.truth_table(gates.Operator(ModeBasis.qudit(2), np.ones((2, 2))))


def test_state_through_ideal_gate():
    s = StateVector.from_levels(ModeBasis.qudit(4), [0, 0, 0, 1])
    assert (gates.pauli_x(4) @ s).amplitude("0") == 1
