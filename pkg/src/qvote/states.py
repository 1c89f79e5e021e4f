"""Dense state vectors over multi-qudit registers.

This is the exact, brute-force backend: full complex amplitude vectors,
unitary application, partial trace, and projective measurement. Register 0
is the most significant digit of the flattened amplitude index, i.e.
``amps.reshape(dims)[j0, j1, ...]`` is the amplitude of ``|j0 j1 ...>``.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

# Hard cap on dense amplitude vectors; larger systems belong on the
# branch backend.
DENSE_AMP_BUDGET = 1 << 22

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10


class DenseBudgetError(ValueError):
    """Requested dense state exceeds DENSE_AMP_BUDGET amplitudes."""


def _check_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise ValueError("need at least one register")
    if any(d < 2 for d in dims):
        raise ValueError(f"register dimensions must be >= 2, got {dims}")
    total = 1
    for d in dims:
        total *= d
        if total > DENSE_AMP_BUDGET:
            raise DenseBudgetError(
                f"dense state with dims {dims} exceeds the amplitude budget "
                f"{DENSE_AMP_BUDGET}; use the branch backend"
            )
    return dims


class DenseState:
    """Normalized pure state over an ordered list of qudit registers."""

    __slots__ = ("dims", "amps")

    def __init__(self, dims: Sequence[int], amps: np.ndarray):
        dims = _check_dims(dims)
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        expected = int(np.prod(dims))
        if amps.size != expected:
            raise ValueError(
                f"amplitude vector has length {amps.size}, dims {dims} need {expected}"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amplitudes must be finite")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        # Renormalize exactly so float drift never compounds across operations.
        amps = amps / norm
        amps.flags.writeable = False
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    def __setattr__(self, name, value):  # immutable once constructed
        raise AttributeError("DenseState is immutable")

    @property
    def num_registers(self) -> int:
        return len(self.dims)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per register."""
        return self.amps.reshape(self.dims)

    def __repr__(self) -> str:
        return f"DenseState(dims={self.dims})"


class DensityMatrix:
    """Validated density matrix: Hermitian, unit trace, positive semidefinite."""

    __slots__ = ("dim", "matrix")

    def __init__(self, matrix: np.ndarray):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {matrix.shape}")
        if np.max(np.abs(matrix - matrix.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        tr = complex(np.trace(matrix))
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr} deviates from 1")
        if float(np.linalg.eigvalsh(matrix)[0]) < -PSD_TOL:
            raise ValueError("density matrix has a negative eigenvalue beyond tolerance")
        matrix = matrix.copy()
        matrix.flags.writeable = False
        object.__setattr__(self, "dim", matrix.shape[0])
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("DensityMatrix is immutable")

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def maximally_mixed(dim: int) -> DensityMatrix:
    return DensityMatrix(np.eye(dim, dtype=complex) / dim)


# ---------------------------------------------------------------------------
# construction


def basis_state(dims: Sequence[int], labels: Sequence[int]) -> DenseState:
    """Computational basis state |labels[0] labels[1] ...>."""
    dims = tuple(dims)
    labels = tuple(labels)
    if len(labels) != len(dims):
        raise ValueError("one label per register required")
    for lab, d in zip(labels, dims):
        if not 0 <= lab < d:
            raise ValueError(f"label {lab} out of range for dimension {d}")
    amps = np.zeros(int(np.prod(dims)), dtype=complex)
    amps[int(np.ravel_multi_index(labels, dims))] = 1.0
    return DenseState(dims, amps)


def product_state(factors: Sequence[np.ndarray]) -> DenseState:
    """Tensor product of normalized single-register vectors."""
    amps = np.asarray([1.0], dtype=complex)
    dims = []
    for f in factors:
        f = np.asarray(f, dtype=complex).reshape(-1)
        dims.append(f.size)
        amps = np.kron(amps, f)
    return DenseState(dims, amps)


def make_uniform_ghz(D: int, N: int) -> DenseState:
    """Correlated state (1/sqrt(D)) sum_j |j>^(x N)."""
    if D < 2:
        raise ValueError(f"qudit dimension must be >= 2, got {D}")
    if N < 1:
        raise ValueError(f"register count must be >= 1, got {N}")
    dims = _check_dims((D,) * N)
    amps = np.zeros(D**N, dtype=complex)
    stride = (D**N - 1) // (D - 1)  # index of |j,j,...,j> is j * stride
    amps[np.arange(D) * stride] = 1.0 / np.sqrt(D)
    return DenseState(dims, amps)


def tensor_states(a: DenseState, b: DenseState) -> DenseState:
    return DenseState(a.dims + b.dims, np.kron(a.amps, b.amps))


# ---------------------------------------------------------------------------
# unitaries


def check_unitary(U: np.ndarray, dim: int | None = None) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"operator must be square, got shape {U.shape}")
    if dim is not None and U.shape[0] != dim:
        raise ValueError(f"operator dimension {U.shape[0]} does not match register dimension {dim}")
    dev = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if dev > UNITARY_TOL:
        raise ValueError(f"operator is not unitary (max deviation {dev:.3e})")
    return U


def apply_local(state: DenseState, register: int, U: np.ndarray) -> DenseState:
    """Apply a single-register unitary: (I x ... x U x ... x I)|state>."""
    if not 0 <= register < state.num_registers:
        raise ValueError(f"register {register} out of range")
    U = check_unitary(U, state.dims[register])
    t = state.tensor()
    t = np.moveaxis(np.tensordot(U, t, axes=([1], [register])), 0, register)
    return DenseState(state.dims, t.reshape(-1))


def apply_joint(state: DenseState, registers: Sequence[int], U: np.ndarray) -> DenseState:
    """Apply a unitary on the joint space of the listed registers."""
    registers = list(registers)
    if len(set(registers)) != len(registers):
        raise ValueError("registers must be distinct")
    for r in registers:
        if not 0 <= r < state.num_registers:
            raise ValueError(f"register {r} out of range")
    sub = int(np.prod([state.dims[r] for r in registers]))
    U = check_unitary(U, sub)
    rest = [r for r in range(state.num_registers) if r not in registers]
    perm = registers + rest
    t = state.tensor().transpose(perm).reshape(sub, -1)
    t = (U @ t).reshape([state.dims[r] for r in perm])
    t = t.transpose(np.argsort(perm))
    return DenseState(state.dims, t.reshape(-1))


# ---------------------------------------------------------------------------
# reduced states and comparisons


def partial_trace(state: DenseState, keep: Sequence[int]) -> DensityMatrix:
    """Reduced density matrix on the kept registers, in the order given."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must name at least one register")
    if len(set(keep)) != len(keep):
        raise ValueError("keep indices must be distinct")
    for r in keep:
        if not 0 <= r < state.num_registers:
            raise ValueError(f"register {r} out of range")
    rest = [r for r in range(state.num_registers) if r not in keep]
    kdim = int(np.prod([state.dims[r] for r in keep]))
    if kdim * kdim > DENSE_AMP_BUDGET:
        raise DenseBudgetError("kept subspace exceeds the dense budget")
    mat = state.tensor().transpose(keep + rest).reshape(kdim, -1)
    return DensityMatrix(mat @ mat.conj().T)


def inner_product(a: DenseState, b: DenseState) -> complex:
    if a.dims != b.dims:
        raise ValueError(f"layout mismatch: {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amps, b.amps))


def trace_distance(a: DensityMatrix | np.ndarray, b: DensityMatrix | np.ndarray) -> float:
    """(1/2)||a - b||_1 via the eigenvalues of the Hermitian difference."""
    am = a.matrix if isinstance(a, DensityMatrix) else np.asarray(a, dtype=complex)
    bm = b.matrix if isinstance(b, DensityMatrix) else np.asarray(b, dtype=complex)
    if am.shape != bm.shape:
        raise ValueError(f"dimension mismatch: {am.shape} vs {bm.shape}")
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(am - bm))))


def align_global_phase(amps: np.ndarray) -> np.ndarray:
    """Rotate a state vector so its largest-magnitude amplitude is real positive.

    Ties are broken toward the first amplitude within a relative 1e-9 of the
    maximum, so two representations of the same state pick the same reference
    component despite last-bit magnitude noise.
    """
    amps = np.asarray(amps, dtype=complex)
    mags = np.abs(amps)
    mmax = float(mags.max(initial=0.0))
    if mmax == 0.0:
        return amps.copy()
    k = int(np.argmax(mags >= mmax * (1.0 - 1e-9)))
    a = amps[k]
    return amps * (abs(a) / a)


def states_close(a: np.ndarray, b: np.ndarray, tol: float = 1e-12) -> bool:
    """Equality of state vectors up to a global phase."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        return False
    return bool(np.max(np.abs(align_global_phase(a) - align_global_phase(b))) <= tol)


# ---------------------------------------------------------------------------
# measurement


def _as_projector_family(
    projectors: Sequence[np.ndarray], dim: int
) -> tuple[list[tuple[str, np.ndarray]], bool]:
    """Validate a family of orthogonal projectors given as matrices or kets.

    Returns the normalized family plus a flag telling whether a remainder
    outcome has to be synthesized to complete the family to the identity.
    """
    if len(projectors) == 0:
        raise ValueError("projector list must not be empty")
    fam: list[tuple[str, np.ndarray]] = []
    vecs = []
    weight = 0.0  # total rank mass, needs to stay <= dim
    for P in projectors:
        P = np.asarray(P, dtype=complex)
        if P.ndim == 1:
            if P.size != dim:
                raise ValueError(f"projector ket has length {P.size}, expected {dim}")
            n = np.linalg.norm(P)
            if abs(n - 1.0) > NORM_TOL:
                raise ValueError("rank-1 projector ket must be normalized")
            fam.append(("ket", P / n))
            vecs.append(P / n)
            weight += 1.0
        elif P.ndim == 2:
            if P.shape != (dim, dim):
                raise ValueError(f"projector has shape {P.shape}, expected {(dim, dim)}")
            if np.max(np.abs(P - P.conj().T)) > NORM_TOL:
                raise ValueError("projector is not Hermitian")
            if np.max(np.abs(P @ P - P)) > NORM_TOL:
                raise ValueError("operator is not idempotent (P^2 != P)")
            fam.append(("mat", P))
            weight += float(np.real(np.trace(P)))
        else:
            raise ValueError("projectors must be matrices or kets")
    # Mutual orthogonality. Kets are checked pairwise via their Gram matrix;
    # a matrix entry is checked against everything by multiplication.
    if vecs:
        V = np.asarray(vecs)
        gram = V.conj() @ V.T
        if np.max(np.abs(gram - np.eye(len(vecs)))) > NORM_TOL:
            raise ValueError("projector kets are not mutually orthogonal")
    mats = [P for kind, P in fam if kind == "mat"]
    for i, P in enumerate(mats):
        for Q in mats[i + 1 :]:
            if np.max(np.abs(P @ Q)) > NORM_TOL:
                raise ValueError("projectors are not mutually orthogonal")
        for v in vecs:
            if np.linalg.norm(P @ v) > NORM_TOL:
                raise ValueError("projectors are not mutually orthogonal")
    if weight > dim + NORM_TOL * len(fam):
        raise ValueError("projector family is overcomplete")
    needs_remainder = weight < dim - 0.5
    return fam, needs_remainder


def sample_index(probs: Sequence[float], rng: np.random.Generator) -> int:
    """Draw an index by inverse CDF; shared by both backends for seed parity."""
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    cum = np.cumsum(probs)
    if cum[-1] <= 0.0:
        raise ValueError("all outcome probabilities vanish")
    u = rng.random() * cum[-1]
    return int(np.searchsorted(cum, u, side="right").clip(0, len(probs) - 1))


def measure_projective(
    state: DenseState,
    projectors: Sequence[np.ndarray],
    rng: np.random.Generator,
    registers: Sequence[int] | None = None,
) -> tuple[int, DenseState, float]:
    """Sample a projective measurement with Born probabilities.

    Projectors act on the joint space of ``registers`` (all registers when
    None) and may be given as matrices or as normalized kets (rank-1). They
    must be mutually orthogonal; if they do not sum to the identity a
    remainder projector is synthesized as the final outcome index
    ``len(projectors)``.

    Returns (outcome index, post-measurement state, outcome probability).
    """
    if registers is None:
        registers = list(range(state.num_registers))
    else:
        registers = list(registers)
        if len(set(registers)) != len(registers):
            raise ValueError("registers must be distinct")
        for r in registers:
            if not 0 <= r < state.num_registers:
                raise ValueError(f"register {r} out of range")
    sub = int(np.prod([state.dims[r] for r in registers]))
    fam, needs_remainder = _as_projector_family(projectors, sub)

    rest = [r for r in range(state.num_registers) if r not in registers]
    perm = registers + rest
    mat = state.tensor().transpose(perm).reshape(sub, -1)

    projected: list[np.ndarray] = []
    probs: list[float] = []
    for kind, P in fam:
        if kind == "ket":
            row = P.conj() @ mat  # amplitudes over the unmeasured factor
            post = np.outer(P, row)
        else:
            post = P @ mat
        projected.append(post)
        probs.append(float(np.real(np.vdot(post, post))))
    if needs_remainder:
        post = mat - sum(projected)
        projected.append(post)
        probs.append(float(np.real(np.vdot(post, post))))
    total = sum(probs)
    if abs(total - 1.0) > NORM_TOL:
        raise ValueError(
            f"projector family does not resolve the identity on the state "
            f"(probabilities sum to {total!r})"
        )

    outcome = sample_index(probs, rng)
    p = probs[outcome]
    post = projected[outcome] / np.sqrt(p)
    post = post.reshape([state.dims[r] for r in perm]).transpose(np.argsort(perm))
    return outcome, DenseState(state.dims, post.reshape(-1)), p


def project_diag(
    state: DenseState, registers: Sequence[int], mask: np.ndarray
) -> tuple[float, DenseState | None]:
    """Deterministic projection onto a diagonal 0/1 mask over the given registers.

    Returns (probability, normalized post-state or None when the probability
    vanishes). The Born-analysis companion to measure_projective.
    """
    registers = list(registers)
    rest = [r for r in range(state.num_registers) if r not in registers]
    perm = registers + rest
    sub = int(np.prod([state.dims[r] for r in registers]))
    mat = state.tensor().transpose(perm).reshape(sub, -1)
    weights = np.asarray(mask, dtype=float).reshape(-1)
    if weights.size != sub:
        raise ValueError("mask size does not match the measured subspace")
    post = mat * weights[:, None]
    p = float(np.real(np.vdot(post, post)))
    if p <= 1e-14:
        return p, None
    post = (post / np.sqrt(p)).reshape([state.dims[r] for r in perm]).transpose(np.argsort(perm))
    return p, DenseState(state.dims, post.reshape(-1))


def project_ket(
    state: DenseState, register: int, ket: np.ndarray
) -> tuple[float, DenseState | None]:
    """Deterministic rank-1 projection of one register onto a normalized ket."""
    ket = np.asarray(ket, dtype=complex).reshape(-1)
    rest = [r for r in range(state.num_registers) if r != register]
    perm = [register] + rest
    mat = state.tensor().transpose(perm).reshape(state.dims[register], -1)
    row = ket.conj() @ mat
    p = float(np.real(np.vdot(row, row)))
    if p <= 1e-14:
        return p, None
    post = np.outer(ket, row / np.sqrt(p))
    post = post.reshape([state.dims[r] for r in perm]).transpose(np.argsort(perm))
    return p, DenseState(state.dims, post.reshape(-1))


# ---------------------------------------------------------------------------
# register bookkeeping


def drop_product_register(state: DenseState, register: int) -> DenseState:
    """Remove a register that is in a product state with the rest.

    Raises if the register is entangled (Schmidt rank > 1 within tolerance).
    """
    if not 0 <= register < state.num_registers:
        raise ValueError(f"register {register} out of range")
    if state.num_registers == 1:
        raise ValueError("cannot drop the only register")
    rest = [r for r in range(state.num_registers) if r != register]
    mat = state.tensor().transpose([register] + rest).reshape(state.dims[register], -1)
    svals = np.linalg.svd(mat, compute_uv=False)
    if svals.size > 1 and svals[1] > 1e-10:
        raise ValueError(f"register {register} is entangled with the rest; cannot drop")
    # Project onto the dominant local vector to extract the rest factor.
    u, _, vh = np.linalg.svd(mat, full_matrices=False)
    rest_amps = vh[0]
    new_dims = tuple(state.dims[r] for r in rest)
    return DenseState(new_dims, rest_amps)
