"""Uniform operation surface over the dense and branch state backends.

Protocol code is written once against this surface; measurement targets are
described as :class:`BranchState` values (the natural language for every
correlated state the protocols use) and the dense backend expands them.
Both backends consume randomness through the same inverse-CDF sampler, so a
shared seed yields identical outcome sequences whenever the Born
probabilities agree.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from . import branches as br
from . import states as st
from .branches import BranchState
from .matrices import swap_pair_matrix
from .states import DenseState


def _controlled_shift_matrix(dc: int, dt: int, shifts: Sequence[int]) -> np.ndarray:
    U = np.zeros((dc * dt, dc * dt), dtype=complex)
    for c in range(dc):
        s = int(shifts[c]) % dt
        for v in range(dt):
            U[c * dt + (v + s) % dt, c * dt + v] = 1.0
    return U


class DenseBackend:
    """Exact dense oracle backend."""

    name = "dense"

    def ghz(self, D: int, N: int) -> DenseState:
        return st.make_uniform_ghz(D, N)

    def from_branches(self, state: BranchState) -> DenseState:
        return br.to_dense(state)

    def attach(self, state: DenseState, dim: int, initial) -> DenseState:
        if isinstance(initial, (int, np.integer)):
            vec = np.zeros(dim, dtype=complex)
            vec[int(initial)] = 1.0
        else:
            vec = np.asarray(initial, dtype=complex)
        return DenseState(state.dims + (dim,), np.kron(state.amps, vec))

    def apply_local(self, state, register, U):
        return st.apply_local(state, register, U)

    def apply_pair(self, state, pair, U):
        return st.apply_joint(state, list(pair), U)

    def controlled_shift(self, state, control, target, shifts):
        U = _controlled_shift_matrix(state.dims[control], state.dims[target], shifts)
        return st.apply_joint(state, [control, target], U)

    def swap(self, state, i, j):
        return st.apply_joint(state, [i, j], swap_pair_matrix(state.dims[i]))

    def measure_targets(self, state, targets: Sequence[BranchState], rng, registers=None):
        kets = [br.to_dense(t).amps for t in targets]
        return st.measure_projective(state, kets, rng, registers=registers)

    def measure_diag(self, state, registers, masks: Sequence[np.ndarray], rng):
        projs = [np.diag(np.asarray(m, dtype=complex).reshape(-1)) for m in masks]
        return st.measure_projective(state, projs, rng, registers=registers)

    def measure_local_kets(self, state, register, kets, rng):
        return st.measure_projective(state, list(kets), rng, registers=[register])

    def reduced(self, state, keep) -> np.ndarray:
        return st.partial_trace(state, keep).matrix

    def amplitudes(self, state) -> np.ndarray:
        return state.amps

    def drop(self, state, register):
        return st.drop_product_register(state, register)

    def dims(self, state):
        return state.dims

    def project_diag(self, state, registers, mask):
        return st.project_diag(state, registers, mask)

    def project_ket(self, state, register, ket):
        return st.project_ket(state, register, ket)

    def target_probability(self, state, target: BranchState) -> float:
        return float(abs(np.vdot(br.to_dense(target).amps, state.amps)) ** 2)


class BranchBackend:
    """Scalable structured backend."""

    name = "branch"

    def ghz(self, D: int, N: int) -> BranchState:
        return br.ghz_branches(D, N)

    def from_branches(self, state: BranchState) -> BranchState:
        return state

    def attach(self, state, dim, initial):
        return br.attach_register(state, dim, initial)

    def apply_local(self, state, register, U):
        return br.apply_branch_local(state, register, U)

    def apply_pair(self, state, pair, U):
        return br.apply_pair_unitary(state, pair, U)

    def controlled_shift(self, state, control, target, shifts):
        return br.apply_controlled_shift(state, control, target, shifts)

    def swap(self, state, i, j):
        return br.swap_registers(state, i, j)

    def measure_targets(self, state, targets, rng, registers=None):
        return br.branch_measure(state, list(targets), rng, registers=registers)

    def measure_diag(self, state, registers, masks, rng):
        projs = [np.diag(np.asarray(m, dtype=float).reshape(-1)) for m in masks]
        return br.branch_measure(state, projs, rng, registers=registers)

    def measure_local_kets(self, state, register, kets, rng):
        return br.branch_measure(state, list(kets), rng, registers=[register])

    def reduced(self, state, keep) -> np.ndarray:
        return br.branch_partial_trace(state, keep).matrix

    def amplitudes(self, state) -> np.ndarray:
        return br.to_dense(state).amps

    def drop(self, state, register):
        return br.drop_register(state, register)

    def dims(self, state):
        return state.dims

    def project_diag(self, state, registers, mask):
        return br.project_diag(state, registers, mask)

    def project_ket(self, state, register, ket):
        return br.project_ket(state, register, ket)

    def target_probability(self, state, target: BranchState) -> float:
        return float(abs(br.branch_inner(target, state)) ** 2)


_BACKENDS = {"dense": DenseBackend(), "branch": BranchBackend()}


def get_backend(name):
    """Resolve a backend by name; backend instances pass through unchanged."""
    if isinstance(name, (DenseBackend, BranchBackend)):
        return name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose 'dense' or 'branch'") from None
