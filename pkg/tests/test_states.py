"""Dense state-core tests: construction, unitaries, traces, measurement."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qvote.matrices import phase_vote_matrix, shift_matrix, swap_pair_matrix
from qvote.states import (
    DenseBudgetError,
    DenseState,
    DensityMatrix,
    apply_joint,
    apply_local,
    basis_state,
    drop_product_register,
    inner_product,
    make_uniform_ghz,
    maximally_mixed,
    measure_projective,
    partial_trace,
    product_state,
    states_close,
    trace_distance,
)


def ghz_amps(D, N):
    amps = np.zeros(D**N, dtype=complex)
    # hand enumeration: |j,j,...,j> sits at sum_k j * D^k
    for j in range(D):
        idx = 0
        for _ in range(N):
            idx = idx * D + j
        amps[idx] = 1 / np.sqrt(D)
    return amps


def traveling_tally_state(D, m):
    # (1/sqrt(D)) sum_j |j>_a |j+m>_b
    amps = np.zeros(D * D, dtype=complex)
    for j in range(D):
        amps[j * D + (j + m) % D] = 1 / np.sqrt(D)
    return DenseState((D, D), amps)


class TestConstruction:
    def test_ghz_single_register(self):
        s = make_uniform_ghz(2, 1)
        assert np.allclose(s.amps, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_ghz_bell_pair(self):
        s = make_uniform_ghz(2, 2)
        assert np.allclose(s.amps, [1 / np.sqrt(2), 0, 0, 1 / np.sqrt(2)])

    def test_ghz_three_qutrits_hand_enumerated(self):
        s = make_uniform_ghz(3, 3)
        expected = np.zeros(27, dtype=complex)
        expected[[0, 13, 26]] = 1 / np.sqrt(3)  # 000, 111, 222 in base 3
        assert np.allclose(s.amps, expected)
        assert np.allclose(s.amps, ghz_amps(3, 3))

    def test_budget_rejected(self):
        with pytest.raises(DenseBudgetError):
            make_uniform_ghz(2, 23)

    def test_degenerate_dim_rejected(self):
        with pytest.raises(ValueError):
            make_uniform_ghz(1, 2)

    def test_norm_validation(self):
        with pytest.raises(ValueError):
            DenseState((2,), np.array([1.0, 1.0]))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            DenseState((2,), np.array([np.nan, 0.0]))


class TestApplyLocal:
    def test_identity_leaves_state(self):
        s = make_uniform_ghz(3, 2)
        s2 = apply_local(s, 0, np.eye(3))
        assert np.allclose(s2.amps, s.amps)

    def test_shift_on_second_register_gives_shifted_tally_state(self):
        D = 4
        s = make_uniform_ghz(D, 2)
        s2 = apply_local(s, 1, shift_matrix(D))
        assert np.allclose(s2.amps, traveling_tally_state(D, 1).amps)

    def test_phase_op_gives_phase_tally_state(self):
        D, N = 3, 3
        s = make_uniform_ghz(D, N)
        s2 = apply_local(s, 1, phase_vote_matrix(D))
        expected = ghz_amps(D, N)
        for j in range(D):
            idx = j * (D**N - 1) // (D - 1)
            expected[idx] *= np.exp(2j * np.pi * j / D)
        assert np.allclose(s2.amps, expected)

    def test_non_unitary_rejected(self):
        s = make_uniform_ghz(2, 2)
        with pytest.raises(ValueError):
            apply_local(s, 0, np.array([[1, 1], [0, 1]], dtype=complex))

    def test_dimension_mismatch_rejected(self):
        s = make_uniform_ghz(3, 2)
        with pytest.raises(ValueError):
            apply_local(s, 0, np.eye(2))


class TestApplyJoint:
    def test_swap_exchanges_labels(self):
        D = 3
        for k in range(D):
            for j in range(D):
                s = basis_state((D, D), (k, j))
                s2 = apply_joint(s, [0, 1], swap_pair_matrix(D))
                assert np.allclose(s2.amps, basis_state((D, D), (j, k)).amps)

    def test_identity_on_two_registers(self):
        s = make_uniform_ghz(2, 3)
        s2 = apply_joint(s, [0, 2], np.eye(4))
        assert np.allclose(s2.amps, s.amps)

    def test_controlled_unshift_disentangles(self):
        # U maps |j>_b |j-r mod D>_v -> |j>_b |0>_v for every j (here r=1).
        D, r = 3, 1
        U = np.zeros((D * D, D * D), dtype=complex)
        for j in range(D):
            for v in range(D):
                # shift the v register by -(j - r) conditioned on the b label
                U[j * D + (v - (j - r)) % D, j * D + v] = 1.0
        for j in range(D):
            s = basis_state((D, D), (j, (j - r) % D))
            s2 = apply_joint(s, [0, 1], U)
            assert np.allclose(s2.amps, basis_state((D, D), (j, 0)).amps)


class TestPartialTrace:
    def test_ballot_register_is_maximally_mixed(self):
        D = 5
        s = make_uniform_ghz(D, 2)
        for reg in (0, 1):
            rho = partial_trace(s, [reg])
            assert trace_distance(rho, maximally_mixed(D)) <= 1e-12

    def test_keep_all_is_pure_projector(self):
        s = make_uniform_ghz(2, 2)
        rho = partial_trace(s, [0, 1])
        assert np.max(np.abs(rho.matrix - np.outer(s.amps, s.amps.conj()))) <= 1e-12

    def test_product_state_reduces_cleanly(self):
        # (|00> + |01>)/sqrt(2): tracing register 1 leaves |0><0| on register 0
        s = DenseState((2, 2), np.array([1, 1, 0, 0]) / np.sqrt(2))
        rho = partial_trace(s, [0])
        assert np.allclose(rho.matrix, [[1, 0], [0, 0]])


class TestMeasurement:
    def test_tally_basis_is_deterministic(self):
        D, m = 4, 2
        rng = np.random.default_rng(7)
        state = traveling_tally_state(D, m)
        kets = [traveling_tally_state(D, mm).amps for mm in range(D)]
        outcome, post, p = measure_projective(state, kets, rng)
        assert outcome == m
        assert p == pytest.approx(1.0, abs=1e-12)
        assert states_close(post.amps, state.amps)

    def test_pair_agreement_projector_passes_clean_ballot(self):
        D, N = 3, 3
        rng = np.random.default_rng(3)
        s = make_uniform_ghz(D, N)
        agree = np.zeros((D * D, D * D), dtype=complex)
        for j in range(D):
            agree[j * D + j, j * D + j] = 1.0
        outcome, post, p = measure_projective(s, [agree], rng, registers=[0, 1])
        assert outcome == 0
        assert p == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(post.amps, s.amps)

    def test_trivial_outcome(self):
        rng = np.random.default_rng(0)
        s = basis_state((2,), (0,))
        outcome, post, p = measure_projective(
            s, [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], rng
        )
        assert outcome == 0 and p == pytest.approx(1.0)

    def test_remainder_synthesized(self):
        rng = np.random.default_rng(1)
        amps = np.array([1, 1], dtype=complex) / np.sqrt(2)
        s = DenseState((2,), amps)
        # Only |0><0| supplied: the complement must be synthesized as outcome 1.
        outcomes = {measure_projective(s, [np.diag([1.0, 0.0])], rng)[0] for _ in range(20)}
        assert outcomes == {0, 1}

    def test_non_orthogonal_family_rejected(self):
        rng = np.random.default_rng(2)
        s = basis_state((2,), (0,))
        v = np.array([1, 1]) / np.sqrt(2)
        with pytest.raises(ValueError):
            measure_projective(s, [np.array([1.0, 0]), v], rng)

    def test_empty_projector_list_rejected(self):
        rng = np.random.default_rng(2)
        s = basis_state((2,), (0,))
        with pytest.raises(ValueError):
            measure_projective(s, [], rng)

    def test_born_probabilities_sum_to_one(self):
        rng = np.random.default_rng(5)
        D = 3
        s = make_uniform_ghz(D, 2)
        kets = [basis_state((D, D), (a, b)).amps for a in range(D) for b in range(D)]
        total = 0.0
        for ket in kets:
            amp = np.vdot(ket, s.amps)
            total += abs(amp) ** 2
        assert total == pytest.approx(1.0, abs=1e-12)


class TestInnerProductAndDistance:
    def test_self_overlap(self):
        s = traveling_tally_state(3, 1)
        assert inner_product(s, s) == pytest.approx(1.0)

    def test_distinct_tally_states_orthogonal(self):
        D = 5
        for m in range(D):
            for mp in range(D):
                ov = inner_product(traveling_tally_state(D, m), traveling_tally_state(D, mp))
                assert abs(ov - (1.0 if m == mp else 0.0)) <= 1e-12

    def test_layout_mismatch(self):
        with pytest.raises(ValueError):
            inner_product(make_uniform_ghz(2, 2), make_uniform_ghz(4, 1))

    def test_trace_distance_examples(self):
        rho = maximally_mixed(2)
        p0 = DensityMatrix(np.diag([1.0, 0.0]))
        p1 = DensityMatrix(np.diag([0.0, 1.0]))
        assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-15)
        assert trace_distance(p0, p1) == pytest.approx(1.0, abs=1e-12)
        # eigenvalues of (I/2 - |0><0|) are +/- 1/2
        assert trace_distance(rho, p0) == pytest.approx(0.5, abs=1e-12)

    def test_trace_distance_dim_mismatch(self):
        with pytest.raises(ValueError):
            trace_distance(maximally_mixed(2), maximally_mixed(3))


class TestDropProductRegister:
    def test_drop_pristine_ancilla(self):
        s = product_state([np.array([1, 0, 0]), np.array([0, 1, 0])])
        s2 = drop_product_register(s, 1)
        assert s2.dims == (3,)
        assert np.allclose(np.abs(s2.amps), [1, 0, 0])

    def test_entangled_register_rejected(self):
        s = make_uniform_ghz(2, 2)
        with pytest.raises(ValueError):
            drop_product_register(s, 0)


def random_unitary(dim, rng):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.integers(0, 10_000))
def test_unitaries_preserve_norm(D, N, seed):
    rng = np.random.default_rng(seed)
    s = make_uniform_ghz(D, N)
    reg = int(rng.integers(N))
    s = apply_local(s, reg, random_unitary(D, rng))
    assert abs(s.norm() - 1.0) <= 1e-10
    rho = partial_trace(s, list(range(N)))
    proj = np.outer(s.amps, s.amps.conj())
    assert np.max(np.abs(rho.matrix - proj)) <= 1e-12
