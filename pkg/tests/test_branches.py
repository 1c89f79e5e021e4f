"""Branch-backend tests, all cross-checked against the dense oracle."""

from __future__ import annotations

import numpy as np
import pytest

from qvote.branches import (
    BasisFactor,
    BranchError,
    BranchState,
    VecFactor,
    apply_branch_local,
    apply_controlled_shift,
    apply_pair_unitary,
    attach_register,
    branch_inner,
    branch_measure,
    branch_partial_trace,
    drop_register,
    ghz_branches,
    phase_ghz,
    shifted_ghz,
    swap_registers,
    tensor_branches,
    to_dense,
)
from qvote.matrices import (
    dft_matrix,
    fourier_basis_kets,
    phase_state,
    phase_vote_matrix,
    shift_matrix,
    swap_pair_matrix,
)
from qvote.states import (
    apply_joint,
    apply_local,
    make_uniform_ghz,
    maximally_mixed,
    partial_trace,
    states_close,
    trace_distance,
)


def pair_agree_mask(D):
    """Diagonal projector onto matching labels of two D-dim registers."""
    P = np.zeros((D * D, D * D), dtype=complex)
    for j in range(D):
        P[j * D + j, j * D + j] = 1.0
    return P


class TestConstruction:
    def test_ghz_branches_labels(self):
        s = ghz_branches(2, 3)
        labels = sorted(tuple(f.label for f in fs) for _, fs in s.branches)
        assert labels == [(0, 0, 0), (1, 1, 1)]
        assert all(abs(c - 1 / np.sqrt(2)) < 1e-12 for c, _ in s.branches)

    def test_to_dense_matches_oracle(self):
        assert np.allclose(to_dense(ghz_branches(3, 2)).amps, make_uniform_ghz(3, 2).amps)

    def test_degenerate_dim_rejected(self):
        with pytest.raises(ValueError):
            ghz_branches(1, 1)

    def test_norm_via_gram(self):
        s = ghz_branches(4, 2)
        assert s.norm() == pytest.approx(1.0, abs=1e-12)
        # Non-orthogonal branches: (|0> + |+>)/norm on a single register.
        plus = VecFactor(np.array([1, 1]) / np.sqrt(2))
        raw = BranchState((2,), [(1.0, (BasisFactor(0),)), (1.0, (plus,))], renormalize=False)
        expected = np.linalg.norm([1 + 1 / np.sqrt(2), 1 / np.sqrt(2)])
        assert raw.norm() == pytest.approx(expected, abs=1e-12)


class TestLocalOps:
    def test_phase_op_scales_branch_coefficients(self):
        D, N = 5, 3
        s = apply_branch_local(ghz_branches(D, N), 1, phase_vote_matrix(D))
        for c, fs in s.branches:
            j = fs[0].label
            assert c == pytest.approx(np.exp(2j * np.pi * j / D) / np.sqrt(D))

    def test_shift_moves_labels(self):
        D = 4
        s = apply_branch_local(ghz_branches(D, 2), 1, shift_matrix(D))
        for _, fs in s.branches:
            assert fs[1].label == (fs[0].label + 1) % D

    def test_identity_noop(self):
        s = ghz_branches(3, 2)
        s2 = apply_branch_local(s, 0, np.eye(3))
        assert states_close(to_dense(s2).amps, to_dense(s).amps)

    def test_non_monomial_promotes_to_vector(self):
        H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
        s = apply_branch_local(ghz_branches(2, 2), 0, H)
        assert any(isinstance(fs[0], VecFactor) for _, fs in s.branches)
        dense = apply_local(make_uniform_ghz(2, 2), 0, H)
        assert states_close(to_dense(s).amps, dense.amps)

    def test_matches_dense_oracle_on_phase_sequences(self):
        D, N = 3, 3
        b = ghz_branches(D, N)
        d = make_uniform_ghz(D, N)
        for reg in (0, 2, 1):
            b = apply_branch_local(b, reg, phase_vote_matrix(D))
            d = apply_local(d, reg, phase_vote_matrix(D))
            assert np.max(np.abs(to_dense(b).amps - d.amps)) <= 1e-12


class TestAttachSwapDrop:
    def test_attach_basis_ancilla(self):
        s = attach_register(ghz_branches(2, 2), 3, 0)
        assert s.dims == (2, 2, 3)
        assert all(fs[2].label == 0 for _, fs in s.branches)

    def test_attach_phase_state_matches_oracle(self):
        D = 3
        theta = 1.2
        s = attach_register(ghz_branches(D, 2), D, phase_state(D, theta))
        dense = to_dense(s)
        manual = np.kron(make_uniform_ghz(D, 2).amps, phase_state(D, theta))
        assert np.max(np.abs(dense.amps - manual)) <= 1e-12

    def test_attach_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            attach_register(ghz_branches(2, 2), 2, np.array([1.0, 1.0]))

    def test_swap_matches_oracle(self):
        D = 3
        s = attach_register(ghz_branches(D, 2), D, phase_state(D, 0.7))
        swapped = swap_registers(s, 0, 2)
        dense = apply_joint(to_dense(s), [0, 2], swap_pair_matrix(D))
        assert np.max(np.abs(to_dense(swapped).amps - dense.amps)) <= 1e-12

    def test_drop_product_register(self):
        s = attach_register(ghz_branches(2, 2), 2, 1)
        dropped = drop_register(s, 2)
        assert dropped.dims == (2, 2)
        assert states_close(to_dense(dropped).amps, make_uniform_ghz(2, 2).amps)

    def test_drop_correlated_register_rejected(self):
        with pytest.raises(BranchError):
            drop_register(ghz_branches(2, 2), 0)


class TestControlledShift:
    def test_disentangles_voting_register(self):
        # control label j, target holds j - r: shifting by -(j - r) returns |0>.
        D, r = 4, 2
        s = shifted_ghz(D, (0, -r))
        shifts = [-(j - r) for j in range(D)]
        out = apply_controlled_shift(s, 0, 1, shifts)
        for _, fs in out.branches:
            assert fs[1].label == 0

    def test_matches_dense_oracle(self):
        D = 3
        s = attach_register(ghz_branches(D, 2), D, phase_state(D, 0.4))
        shifts = [(2 * j + 1) % D for j in range(D)]
        out = apply_controlled_shift(s, 0, 2, shifts)
        U = np.zeros((D * D, D * D), dtype=complex)
        for j in range(D):
            for v in range(D):
                U[j * D + (v + shifts[j]) % D, j * D + v] = 1.0
        dense = apply_joint(to_dense(s), [0, 2], U)
        assert np.max(np.abs(to_dense(out).amps - dense.amps)) <= 1e-12


class TestPartialTrace:
    def test_single_register_maximally_mixed(self):
        D, N = 4, 5
        s = ghz_branches(D, N)
        for reg in range(N):
            assert trace_distance(branch_partial_trace(s, [reg]), maximally_mixed(D)) <= 1e-12

    def test_keep_all_matches_projector(self):
        s = phase_ghz(3, 2, 0.9)
        rho = branch_partial_trace(s, [0, 1])
        amps = to_dense(s).amps
        assert np.max(np.abs(rho.matrix - np.outer(amps, amps.conj()))) <= 1e-12

    def test_matches_dense_oracle_with_ancilla(self):
        D = 3
        s = attach_register(ghz_branches(D, 3), D, phase_state(D, 0.3))
        s = apply_branch_local(s, 1, phase_vote_matrix(D))
        dense = to_dense(s)
        for keep in ([0], [2], [0, 3], [3, 1]):
            rb = branch_partial_trace(s, keep)
            rd = partial_trace(dense, keep)
            assert np.max(np.abs(rb.matrix - rd.matrix)) <= 1e-12


class TestPairUnitaryAndJointFactors:
    def test_entangling_map_matches_dense(self):
        D = 3
        rng = np.random.default_rng(11)
        s = attach_register(ghz_branches(D, 3), D, 0)  # ancilla |0> at register 3
        z = rng.normal(size=(D * D, D * D)) + 1j * rng.normal(size=(D * D, D * D))
        q, r = np.linalg.qr(z)
        U = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        out = apply_pair_unitary(s, (3, 0), U)
        dense = apply_joint(to_dense(s), [3, 0], U)
        assert np.max(np.abs(to_dense(out).amps - dense.amps)) <= 1e-12

    def test_partial_trace_through_joint_factor(self):
        D = 2
        rng = np.random.default_rng(5)
        s = attach_register(ghz_branches(D, 3), D, 0)
        z = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        q, r = np.linalg.qr(z)
        U = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        out = apply_pair_unitary(s, (3, 0), U)
        dense = to_dense(out)
        for keep in ([3, 0], [0], [3], [1, 2]):
            rb = branch_partial_trace(out, keep)
            rd = partial_trace(dense, keep)
            assert np.max(np.abs(rb.matrix - rd.matrix)) <= 1e-12

    def test_second_joint_pair_rejected(self):
        D = 2
        s = attach_register(attach_register(ghz_branches(D, 2), D, 0), D, 0)
        # CNOT (control = first pair slot) after a Hadamard on it entangles
        # each branch's product input.
        cnot = np.array(
            [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
        )
        U = cnot @ np.kron(np.array([[1, 1], [1, -1]]) / np.sqrt(2), np.eye(2))
        ent = apply_pair_unitary(s, (2, 0), U)  # creates a joint factor on (0, 2)
        assert any(
            fs[0] is fs[2] and not isinstance(fs[0], (BasisFactor, VecFactor))
            for _, fs in ent.branches
        )
        with pytest.raises(BranchError):
            apply_pair_unitary(ent, (3, 0), U)


class TestMeasurement:
    def test_pair_agreement_passes_clean_ballot(self):
        D = 3
        rng = np.random.default_rng(2)
        s = ghz_branches(D, 3)
        mask = pair_agree_mask(D)
        comp = np.eye(D * D) - mask
        k, post, p = branch_measure(s, [mask, comp], rng, registers=[0, 1])
        assert k == 0 and p == pytest.approx(1.0, abs=1e-12)
        assert states_close(to_dense(post).amps, to_dense(s).amps)

    def test_fourier_frame_measurement_zero_sum(self):
        # Measuring every register in the Fourier-conjugate basis must produce
        # outcomes summing to 0 mod D on the plain correlated state.
        D, N = 3, 3
        rng = np.random.default_rng(8)
        for _ in range(20):
            s = ghz_branches(D, N)
            total = 0
            for reg in range(N):
                kets = fourier_basis_kets(D)
                k, s, _ = branch_measure(s, kets, rng, registers=[reg])
                total += k
            assert total % D == 0

    def test_empty_projector_list_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValueError):
            branch_measure(ghz_branches(2, 2), [], rng)

    def test_rank1_branch_targets(self):
        D, N = 4, 2
        rng = np.random.default_rng(4)
        m = 3
        s = apply_branch_local(ghz_branches(D, N), 0, phase_vote_matrix(D, m))
        targets = [phase_ghz(D, N, 2 * np.pi * q / D) for q in range(D)]
        k, post, p = branch_measure(s, targets, rng)
        assert k == m and p == pytest.approx(1.0, abs=1e-12)
        assert states_close(to_dense(post).amps, to_dense(s).amps)

    def test_subset_branch_target_collapse(self):
        # Measure the first two registers of a 3-register correlated state
        # against correlated 2-register targets, and compare with the oracle.
        D = 2
        rng = np.random.default_rng(9)
        s = ghz_branches(D, 3)
        plus = phase_ghz(D, 2, 0.0)
        minus = phase_ghz(D, 2, np.pi)
        k, post, p = branch_measure(s, [plus, minus], rng, registers=[0, 1])
        assert p == pytest.approx(0.5, abs=1e-12)
        dense_post = to_dense(post)
        target = plus if k == 0 else minus
        expect = np.kron(
            to_dense(target).amps,
            np.array([1, 1 if k == 0 else -1]) / np.sqrt(2),
        )
        assert states_close(dense_post.amps, expect, tol=1e-12)

    def test_probabilities_match_dense_oracle(self):
        D = 3
        rng = np.random.default_rng(10)
        s = attach_register(ghz_branches(D, 2), D, phase_state(D, 1.1))
        # R-type measurement: diagonal masks over (ballot register 0, ancilla 2).
        masks = []
        for r in range(D):
            m = np.zeros((D, D))
            for j in range(D):
                m[(j + r) % D, j] = 1.0
            masks.append(np.diag(m.reshape(-1)))
        probs = []
        st = s
        k, post, p = branch_measure(st, masks, rng, registers=[0, 2])
        assert p == pytest.approx(1.0 / D, abs=1e-12)
        dense_post = to_dense(post)
        assert abs(np.linalg.norm(dense_post.amps) - 1.0) <= 1e-10

    def test_diag_remainder(self):
        D = 2
        rng = np.random.default_rng(3)
        s = ghz_branches(D, 2)
        mask = np.diag([1.0, 0, 0, 0])
        seen = set()
        for _ in range(30):
            k, post, p = branch_measure(s, [mask], rng, registers=[0, 1])
            seen.add(k)
            assert p == pytest.approx(0.5, abs=1e-12)
        assert seen == {0, 1}


class TestTensorAndInner:
    def test_tensor_product_branch_count(self):
        a = ghz_branches(2, 3)
        b = ghz_branches(2, 3)
        ab = tensor_branches(a, b)
        assert len(ab.branches) == 4
        manual = np.kron(to_dense(a).amps, to_dense(b).amps)
        assert np.max(np.abs(to_dense(ab).amps - manual)) <= 1e-12

    def test_branch_inner_matches_dense(self):
        a = phase_ghz(3, 2, 0.5)
        b = phase_ghz(3, 2, 1.7)
        dense = np.vdot(to_dense(a).amps, to_dense(b).amps)
        assert branch_inner(a, b) == pytest.approx(dense, abs=1e-12)


def test_oracle_equivalence_protocol_sequences():
    """Mixed op sequences expand to exactly the dense result (phase aligned)."""
    rng = np.random.default_rng(21)
    for D, N in [(2, 3), (3, 2), (4, 3)]:
        b = ghz_branches(D, N)
        d = make_uniform_ghz(D, N)
        b = attach_register(b, D, phase_state(D, 0.8))
        d_amps = np.kron(d.amps, phase_state(D, 0.8))
        from qvote.states import DenseState

        d = DenseState((D,) * (N + 1), d_amps)
        for reg in range(N):
            if rng.random() < 0.5:
                b = apply_branch_local(b, reg, phase_vote_matrix(D))
                d = apply_local(d, reg, phase_vote_matrix(D))
            else:
                b = apply_branch_local(b, reg, shift_matrix(D))
                d = apply_local(d, reg, shift_matrix(D))
        shifts = [j % D for j in range(D)]
        b = apply_controlled_shift(b, 0, N, shifts)
        U = np.zeros((D * D, D * D), dtype=complex)
        for j in range(D):
            for v in range(D):
                U[j * D + (v + shifts[j]) % D, j * D + v] = 1.0
        d = apply_joint(d, [0, N], U)
        assert len(b.branches) <= D
        assert np.max(np.abs(to_dense(b).amps - d.amps)) <= 1e-12
