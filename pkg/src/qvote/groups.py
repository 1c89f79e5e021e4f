"""Distributed group multiplication over entangled traveling registers.

A finite group is given by its Cayley table. Parties encode choices as
unitaries from a representation whose non-identity elements are traceless;
that makes the candidate final states exactly orthogonal, so the collector
(who never learns the individual choices) reads off the product with one
projective measurement. The regular representation always qualifies; the
Klein four-group admits a dimension-2 projective representation by Pauli
matrices, which is the dense-coding special case.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections.abc import Sequence

import numpy as np

from .backends import get_backend
from .branches import BasisFactor, BranchState, VecFactor
from .matrices import PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, phase_vote_matrix
from .states import check_unitary, maximally_mixed, trace_distance

TRACE_TOL = 1e-10
REP_TOL = 1e-10


class FiniteGroup:
    """Finite group defined by an explicit Cayley table of element indices."""

    def __init__(self, table: Sequence[Sequence[int]], names: Sequence[str] | None = None):
        table = np.asarray(table, dtype=int)
        if table.ndim != 2 or table.shape[0] != table.shape[1]:
            raise ValueError("Cayley table must be square")
        n = table.shape[0]
        if table.min() < 0 or table.max() >= n:
            raise ValueError("Cayley table entries must be element indices")
        self.table = table
        self.order = n
        self.names = list(names) if names is not None else [f"g{i}" for i in range(n)]
        if len(self.names) != n:
            raise ValueError("one name per element required")

        # identity: the unique e with e*g = g*e = g for all g
        ident = [e for e in range(n) if all(table[e][g] == g and table[g][e] == g for g in range(n))]
        if len(ident) != 1:
            raise ValueError("Cayley table has no unique identity element")
        self.identity = ident[0]

        self.inverse = np.full(n, -1, dtype=int)
        for g in range(n):
            inv = [h for h in range(n) if table[g][h] == self.identity]
            if len(inv) != 1 or table[inv[0]][g] != self.identity:
                raise ValueError(f"element {g} has no unique two-sided inverse")
            self.inverse[g] = inv[0]

        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if table[table[a][b]][c] != table[a][table[b][c]]:
                        raise ValueError(
                            f"Cayley table is not associative at ({a}, {b}, {c})"
                        )

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a][b])

    def product(self, elements: Sequence[int]) -> int:
        p = self.identity
        for g in elements:
            p = self.mul(p, int(g))
        return p

    def __repr__(self) -> str:
        return f"FiniteGroup(order={self.order})"


def cyclic_group(n: int) -> FiniteGroup:
    idx = np.arange(n)
    return FiniteGroup((idx[:, None] + idx[None, :]) % n, names=[str(i) for i in range(n)])


def klein_four_group() -> FiniteGroup:
    # XOR on {0..3}: x_j^2 = e and the product of two distinct non-identity
    # elements is the third one.
    idx = np.arange(4)
    return FiniteGroup(idx[:, None] ^ idx[None, :], names=["e", "x1", "x2", "x3"])


def direct_product(a: FiniteGroup, b: FiniteGroup) -> FiniteGroup:
    na, nb = a.order, b.order
    table = np.empty((na * nb, na * nb), dtype=int)
    for i in range(na):
        for j in range(nb):
            for k in range(na):
                for l in range(nb):
                    table[i * nb + j][k * nb + l] = a.mul(i, k) * nb + b.mul(j, l)
    names = [f"({a.names[i]},{b.names[j]})" for i in range(na) for j in range(nb)]
    return FiniteGroup(table, names=names)


def symmetric_group_3() -> FiniteGroup:
    perms = [
        (0, 1, 2),
        (1, 0, 2),
        (2, 1, 0),
        (0, 2, 1),
        (1, 2, 0),
        (2, 0, 1),
    ]
    names = ["e", "(01)", "(02)", "(12)", "(012)", "(021)"]
    index = {p: i for i, p in enumerate(perms)}
    n = len(perms)
    table = np.empty((n, n), dtype=int)
    for i, p in enumerate(perms):
        for j, q in enumerate(perms):
            comp = tuple(p[q[k]] for k in range(3))  # apply q first, then p
            table[i][j] = index[comp]
    return FiniteGroup(table, names=names)


BUILTIN_GROUPS = {
    "klein4": klein_four_group,
    "s3": symmetric_group_3,
    "z2": lambda: cyclic_group(2),
    "z3": lambda: cyclic_group(3),
    "z4": lambda: cyclic_group(4),
    "z2xz2": lambda: direct_product(cyclic_group(2), cyclic_group(2)),
}


def load_cayley_table(text: str) -> FiniteGroup:
    """Parse the plain-text table format: first line order, then table rows."""
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        raise ValueError("empty Cayley table document")
    try:
        order = int(lines[0])
    except ValueError:
        raise ValueError(f"first line must be the group order, got {lines[0]!r}") from None
    rows = lines[1:]
    if len(rows) != order:
        raise ValueError(f"expected {order} table rows, got {len(rows)}")
    table = []
    for i, row in enumerate(rows):
        entries = row.split()
        if len(entries) != order:
            raise ValueError(f"row {i} has {len(entries)} entries, expected {order}")
        table.append([int(x) for x in entries])
    return FiniteGroup(table)


def format_cayley_table(group: FiniteGroup) -> str:
    rows = [" ".join(str(int(x)) for x in row) for row in group.table]
    return "\n".join([str(group.order)] + rows) + "\n"


# ---------------------------------------------------------------------------
# representations


class Representation:
    """Per-element unitary matrices, ordinary or projective."""

    def __init__(self, group: FiniteGroup, matrices: Sequence[np.ndarray], projective: bool = False):
        if len(matrices) != group.order:
            raise ValueError("one matrix per group element required")
        mats = [check_unitary(np.asarray(M, dtype=complex)) for M in matrices]
        dim = mats[0].shape[0]
        if any(M.shape[0] != dim for M in mats):
            raise ValueError("all representation matrices must share one dimension")
        self.group = group
        self.dim = dim
        self.matrices = mats
        self.projective = projective
        self._validate_law()

    def _validate_law(self) -> None:
        n = self.group.order
        eye = np.eye(self.dim)
        for a in range(n):
            for b in range(n):
                prod = self.matrices[a] @ self.matrices[b]
                target = self.matrices[self.group.mul(a, b)]
                if self.projective:
                    # prod must equal e^{i w} * target for some real w
                    ratio = target.conj().T @ prod
                    phase = np.trace(ratio) / self.dim
                    if abs(abs(phase) - 1.0) > REP_TOL or np.max(np.abs(ratio - phase * eye)) > REP_TOL:
                        raise ValueError(
                            f"matrices violate the projective law at pair ({a}, {b})"
                        )
                else:
                    if np.max(np.abs(prod - target)) > REP_TOL:
                        raise ValueError(f"matrices violate the homomorphism law at pair ({a}, {b})")

    def matrix(self, g: int) -> np.ndarray:
        return self.matrices[int(g)]


def klein4() -> tuple[FiniteGroup, Representation]:
    """Klein four-group with its dimension-2 projective Pauli representation."""
    group = klein_four_group()
    rep = Representation(group, [PAULI_I, PAULI_X, PAULI_Y, PAULI_Z], projective=True)
    return group, rep


def regular_representation(group: FiniteGroup) -> Representation:
    """Permutation matrices U(g_n)[j, k] = 1 iff g_j^{-1} g_k = g_n.

    Dimension equals the group order; every non-identity element is
    traceless, so the result is always protocol-ready.
    """
    n = group.order
    mats = []
    for gn in range(n):
        M = np.zeros((n, n), dtype=complex)
        for j in range(n):
            for k in range(n):
                if group.mul(int(group.inverse[j]), k) == gn:
                    M[j, k] = 1.0
        mats.append(M)
    return Representation(group, mats, projective=False)


@dataclass
class ReadinessReport:
    """Distinguishability diagnostics for a candidate representation."""

    ready: bool
    traces: list[float]            # |Tr U(g)| per element
    max_offidentity_trace: float
    max_state_overlap: float       # max |<Psi| I x U(g2^-1 g1) |Psi>| over g1 != g2
    overlaps: np.ndarray = field(repr=False)


def check_protocol_ready(rep: Representation) -> ReadinessReport:
    """Trace condition plus explicit pairwise overlaps of the candidate states."""
    n = rep.group.order
    traces = [float(abs(np.trace(M))) for M in rep.matrices]
    off = [traces[g] for g in range(n) if g != rep.group.identity]
    max_off = max(off) if off else 0.0

    # states (I x U(g)) |Psi| with |Psi> maximally correlated: overlap of a
    # pair is Tr(U(g1)^dagger U(g2)) / dim, computed explicitly.
    vecs = []
    for g in range(n):
        amps = rep.matrices[g].T.reshape(-1) / np.sqrt(rep.dim)  # sum_j |j> U|j>
        vecs.append(amps)
    V = np.asarray(vecs)
    gram = V.conj() @ V.T
    offdiag = np.abs(gram - np.diag(np.diagonal(gram)))
    return ReadinessReport(
        ready=max_off <= TRACE_TOL,
        traces=traces,
        max_offidentity_trace=max_off,
        max_state_overlap=float(np.max(offdiag)) if n > 1 else 0.0,
        overlaps=gram,
    )


# ---------------------------------------------------------------------------
# protocols


def _target_states(rep: Representation) -> list[BranchState]:
    """Candidate final states (I x U(g))|Psi> as branch states."""
    dim = rep.dim
    targets = []
    c = 1.0 / np.sqrt(dim)
    for M in rep.matrices:
        branches = []
        for j in range(dim):
            col = M[:, j]
            nz = np.flatnonzero(np.abs(col) > 1e-12)
            if nz.size == 1:
                branches.append(
                    (c * col[nz[0]], (BasisFactor(j), BasisFactor(int(nz[0]))))
                )
            else:
                branches.append((c, (BasisFactor(j), VecFactor(col))))
        targets.append(BranchState((dim, dim), branches, renormalize=False))
    return targets


def run_group_traveling(
    group: FiniteGroup,
    rep: Representation,
    choices: Sequence[int],
    backend="dense",
    rng=None,
    record_privacy: bool = False,
) -> int:
    """Travel one register through all parties; return the product of choices.

    Each party holding choice g applies U(g^{-1}); operator composition then
    accumulates U((g_a g_b ... g_n)^{-1}) regardless of group commutativity,
    and the collector inverts her measured element to report the in-order
    product g_a g_b ... g_n.
    """
    report = check_protocol_ready(rep)
    if not report.ready:
        raise ValueError(
            "representation is not protocol-ready: non-identity trace magnitude "
            f"{report.max_offidentity_trace:.3e} breaks state distinguishability"
        )
    choices = [int(g) for g in choices]
    for g in choices:
        if not 0 <= g < group.order:
            raise ValueError(f"choice {g} is not a group element index")
    bk = get_backend(backend)
    # protocol-ready runs are deterministic, so a fixed fallback seed keeps
    # the no-global-randomness contract without burdening callers
    rng = rng if rng is not None else np.random.default_rng(0)

    state = bk.ghz(rep.dim, 2)
    privacy = []
    for g in choices:
        state = bk.apply_local(state, 1, rep.matrix(int(group.inverse[g])))
        if record_privacy:
            privacy.append(
                trace_distance(bk.reduced(state, [1]), maximally_mixed(rep.dim).matrix)
            )
    outcome, _, _ = bk.measure_targets(state, _target_states(rep), rng)
    if outcome >= group.order:
        raise RuntimeError("measurement leaked into the residual projector")
    if record_privacy and privacy and max(privacy) > 1e-12:
        raise RuntimeError("traveling register was not maximally mixed during the run")
    return int(group.inverse[outcome])


def run_abelian_distributed(
    cyclic_factors: Sequence[int],
    choices: Sequence[Sequence[int]],
    backend="dense",
    rng=None,
) -> tuple[int, ...]:
    """Distributed multiplication in a product of cyclic groups.

    One shared correlated register group per cyclic factor; a party encodes
    component c by the diagonal phase of order d raised to c. The collector
    measures each factor in its phase basis and reads off the componentwise
    sum. Plain yes/no voting is the single-factor special case.
    """
    factors = [int(d) for d in cyclic_factors]
    if not factors or any(d < 2 for d in factors):
        raise ValueError("cyclic factor moduli must all be >= 2")
    choices = [tuple(int(c) for c in ch) for ch in choices]
    if not choices:
        raise ValueError("at least one party required")
    for ch in choices:
        if len(ch) != len(factors):
            raise ValueError("each choice needs one component per cyclic factor")
        for c, d in zip(ch, factors):
            if not 0 <= c < d:
                raise ValueError(f"component {c} out of range for modulus {d}")
    bk = get_backend(backend)
    rng = rng if rng is not None else np.random.default_rng(0)
    n_parties = len(choices)

    result = []
    for f, d in enumerate(factors):
        state = bk.ghz(d, n_parties)
        for k, ch in enumerate(choices):
            if ch[f]:
                state = bk.apply_local(state, k, phase_vote_matrix(d, ch[f]))
        targets = [
            BranchState(
                (d,) * n_parties,
                [
                    (
                        np.exp(2j * np.pi * j * y / d) / np.sqrt(d),
                        tuple(BasisFactor(j) for _ in range(n_parties)),
                    )
                    for j in range(d)
                ],
                renormalize=False,
            )
            for y in range(d)
        ]
        outcome, _, _ = bk.measure_targets(state, targets, rng)
        result.append(int(outcome))
    return tuple(result)
