"""Attack models and their detection statistics.

Cheating voter: estimates the secret voting angles with a phase-estimation
POVM (Fejer-kernel outcome density), votes no with the estimate, and shifts
s yes votes to no votes with a diagonal phase applied s times. The readout
index the authority measures then follows a broad distribution peaked at
(m - s) mod D, reproduced here three ways: protocol-level simulation, a
vectorized Monte Carlo over the exact per-trial amplitudes, and the closed
form valid for D = N+1, levels (1, 0), s > D/2.

Eavesdroppers: man-in-the-middle on the traveling ballot (undetectable,
leaks perfectly), the swap attack on the distributed ballot (leaks
perfectly, caught by a pair agreement check with probability 1 - 1/D), the
general entangling attack (detection probability computable from the
attack's columns; undetectable product-form attacks leave the eavesdropper
with a vote-independent reduced state), and the classical baseline
eavesdropper (perfect leak, no detection possible).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .anticheat import (
    AntiCheatRound,
    AuthoritySecrets,
    ReadoutResult,
    _cast_vote_on,
    authority_correct,
    authority_readout,
    setup,
    vote_distributed,
    vote_measurement_masks,
    wrap_correction_diag,
)
from .backends import get_backend
from .branches import phase_ghz, shifted_ghz
from .matrices import (
    angle_phase_matrix,
    phase_state,
    phase_vote_matrix,
    shift_matrix,
    swap_pair_matrix,
)
from .protocols import ProtocolConfig, sample_zero_sum_ballots
from .states import check_unitary, sample_index


def total_variation(p, q) -> float:
    """TV distance between two histograms or probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must have the same shape")
    if p.sum() > 0:
        p = p / p.sum()
    if q.sum() > 0:
        q = q / q.sum()
    return float(0.5 * np.sum(np.abs(p - q)))


# ---------------------------------------------------------------------------
# phase estimation


class PhasePOVM:
    """Continuous phase-estimation measurement on a phase state.

    Measuring (1/sqrt(D)) sum_j e^{ij theta}|j> yields estimates with density
    |sum_j e^{ij(x - theta)}|^2 / (2 pi D), the Fejer kernel centered at
    theta. Sampling inverts the exact closed-form CDF on a uniform grid with
    linear interpolation; the grid is doubled from 4096 points until the
    interpolation error stabilizes below 1e-7.
    """

    MIN_GRID = 4096
    MAX_GRID = 1 << 16

    def __init__(self, D: int, theta_true: float):
        if D < 1:
            raise ValueError("dimension must be >= 1")
        self.D = int(D)
        self.theta = float(theta_true)
        n = self.MIN_GRID
        while True:
            xs = np.linspace(0.0, 2 * np.pi, n + 1)
            cs = self.cdf(xs)
            mids = 0.5 * (xs[:-1] + xs[1:])
            err = float(np.max(np.abs(self.cdf(mids) - 0.5 * (cs[:-1] + cs[1:]))))
            if err < 1e-7 or n >= self.MAX_GRID:
                break
            n *= 2
        cs[0], cs[-1] = 0.0, 1.0
        self._xs = xs
        self._cs = np.maximum.accumulate(cs)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        u = x - self.theta
        out = np.full_like(u, float(self.D))
        for d in range(1, self.D):
            out = out + 2 * (self.D - d) * np.cos(d * u)
        return out / (2 * np.pi * self.D)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = self.D * x
        for d in range(1, self.D):
            out = out + 2 * (self.D - d) / d * (np.sin(d * (x - self.theta)) + np.sin(d * self.theta))
        return out / (2 * np.pi * self.D)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> float | np.ndarray:
        u = rng.random(size)
        idx = np.clip(np.searchsorted(self._cs, u, side="right"), 1, len(self._cs) - 1)
        c0, c1 = self._cs[idx - 1], self._cs[idx]
        x0, x1 = self._xs[idx - 1], self._xs[idx]
        frac = np.where(c1 > c0, (u - c0) / np.where(c1 > c0, c1 - c0, 1.0), 0.0)
        out = x0 + frac * (x1 - x0)
        return float(out) if size is None else out


def sample_phase_estimate(povm: PhasePOVM, rng: np.random.Generator, size: int | None = None):
    """Draw angle estimates from the POVM's outcome density."""
    return povm.sample(rng, size)


# ---------------------------------------------------------------------------
# cheating voter


@dataclass(frozen=True)
class CheaterPlan:
    """Shift count plus (optionally fixed) angle estimates.

    Estimates left as None are measured with the phase POVM on the voting
    qudits the authority distributed.
    """

    s: int
    theta_yes_est: float | None = None
    theta_no_est: float | None = None

    def __post_init__(self):
        if self.s == 0:
            raise ValueError(
                "s = 0 is an honest vote; run the anti-cheat protocol instead"
            )
        if self.s < 0:
            raise ValueError("shift count must be >= 1")


def run_cheater_attack(
    D: int,
    N: int,
    secrets: AuthoritySecrets,
    honest_votes,
    plan: CheaterPlan,
    rng: np.random.Generator,
    backend: str = "branch",
    cheater_position: int | None = None,
) -> tuple[ReadoutResult, dict]:
    """Full round with one cheating voter (the last one by default).

    The cheater measures both his voting qudits with the phase POVM, votes
    no using the estimated no-angle (announcing his genuine measurement
    outcome r), then applies the estimated yes-to-no phase shift s times to
    his ballot register before returning it. The voting order does not
    change the outcome statistics; ``cheater_position`` exists to verify
    exactly that.
    """
    honest_votes = [int(v) for v in honest_votes]
    if len(honest_votes) != N - 1:
        raise ValueError(f"expected {N - 1} honest votes, got {len(honest_votes)}")
    cheater = N - 1 if cheater_position is None else int(cheater_position)
    if not 0 <= cheater < N:
        raise ValueError("cheater position out of range")
    round_ = setup(D, N, secrets, rng, backend=backend)

    th_y = plan.theta_yes_est
    th_n = plan.theta_no_est
    if th_y is None:
        th_y = float(sample_phase_estimate(PhasePOVM(D, secrets.yes_angle(D)), rng))
    if th_n is None:
        th_n = float(sample_phase_estimate(PhasePOVM(D, secrets.no_angle(D)), rng))

    honest_iter = iter(honest_votes)
    r = -1
    for voter in range(N):
        if voter != cheater:
            vote_distributed(round_, voter, next(honest_iter), rng)
            continue
        r = _cast_vote_on(round_, round_.ballot_regs[voter], th_n, rng)
        round_.announced[voter] = r
        bk = round_.backend
        round_.state = bk.apply_local(
            round_.state,
            round_.ballot_regs[voter],
            angle_phase_matrix(D, plan.s * (th_n - th_y)),
        )
    authority_correct(round_)
    result = authority_readout(round_, rng)
    info = {"r": r, "theta_yes_est": th_y, "theta_no_est": th_n, "m_honest": sum(honest_votes)}
    return result, info


def conditional_pq(
    D: int,
    s: int,
    m: int,
    r: int,
    theta_yes_est: float,
    theta_no_est: float,
    secrets: AuthoritySecrets,
) -> np.ndarray:
    """Closed-form conditional readout distribution over q in [0, D).

    Probability that the corrected state lands on readout index q given the
    cheater's announced r, his angle estimates, and m honest yes votes.
    """
    theta_n = secrets.no_angle(D)
    delta_angle = 2 * np.pi * secrets.gap / D
    phi = m * delta_angle - theta_n - 2 * np.pi * np.arange(D) / D
    gamma = s * (theta_no_est - theta_yes_est) + theta_no_est + phi  # per q
    j = np.arange(D)
    wrap = np.exp(1j * D * (theta_no_est - secrets.offset))
    terms = np.exp(1j * np.outer(j, gamma))  # (j, q)
    low = terms[:r].sum(axis=0) if r > 0 else 0.0
    high = terms[r:].sum(axis=0)
    return np.abs(wrap * low + high) ** 2 / D**2


def cheater_conditional_distribution(
    D: int,
    N: int,
    secrets: AuthoritySecrets,
    m: int,
    s: int,
    theta_yes_est: float,
    theta_no_est: float,
    r: int,
    backend: str = "dense",
) -> np.ndarray:
    """Exact simulated counterpart of :func:`conditional_pq`.

    Runs the protocol with m honest yes votes, forcing every vote-measurement
    outcome (honest voters to 0, the cheater to r) by Born projection instead
    of sampling, and returns the readout distribution over all q in [0, D).
    """
    if not 0 <= m <= N - 1:
        raise ValueError("m must be an honest yes-count in [0, N-1]")
    if not 0 <= r < D:
        raise ValueError("r out of range")
    bk = get_backend(backend)
    masks = vote_measurement_masks(D)

    def forced_vote(state, ballot_reg, theta, forced_r):
        state = bk.attach(state, D, phase_state(D, theta))
        v = len(bk.dims(state)) - 1
        p, state = bk.project_diag(state, [ballot_reg, v], masks[forced_r])
        if state is None:
            raise RuntimeError("forced outcome has zero probability")
        if forced_r:
            state = bk.apply_local(state, v, shift_matrix(D, forced_r))
        return state

    state = bk.ghz(D, N)
    votes = [1] * m + [0] * (N - 1 - m)
    for voter, v in enumerate(votes):
        theta = secrets.yes_angle(D) if v else secrets.no_angle(D)
        state = forced_vote(state, voter, theta, 0)
    state = forced_vote(state, N - 1, theta_no_est, r)
    state = bk.apply_local(state, N - 1, angle_phase_matrix(D, s * (theta_no_est - theta_yes_est)))
    # authority corrections: wrap phases for every announced outcome, then the
    # common no-angle removal (honest outcomes were forced to 0 = identity)
    state = bk.apply_local(state, 0, wrap_correction_diag(D, r, secrets.offset))
    removal = np.diag(np.exp(-1j * np.arange(D) * N * secrets.no_angle(D)))
    state = bk.apply_local(state, 0, removal)
    regs = len(bk.dims(state))
    return np.array(
        [bk.target_probability(state, phase_ghz(D, regs, 2 * np.pi * q / D)) for q in range(D)]
    )


def analytic_pq(D: int, s: int, m: int, q: int | None = None):
    """Closed-form readout distribution for D = N+1, levels (1, 0), s > D/2.

    Returns p(q) for one index, or the full length-D vector when q is None.
    Outside the stated parameter regime the formula is not claimed and the
    call is rejected.
    """
    if not (isinstance(s, (int, np.integer)) and isinstance(m, (int, np.integer))):
        raise ValueError("s and m must be integers")
    if not 2 * s > D:
        raise ValueError(f"closed form requires s > D/2 (got s={s}, D={D})")
    if not s < D:
        raise ValueError(f"closed form requires s < D (got s={s}, D={D})")
    c = 2 * (D - s) * ((D - 2) * (D - s - 1) + (s + 1)) / D**3
    qs = np.arange(D) if q is None else np.asarray(q)
    p = (1 + c * np.cos(2 * np.pi * (m - s - qs) / D)) / D
    return p if q is None else float(p)


def broadness_coefficient(D: int, s: int) -> float:
    """The cosine amplitude c of the closed form; c < 1 makes every readout
    index reachable."""
    return 2 * (D - s) * ((D - 2) * (D - s - 1) + (s + 1)) / D**3


def monte_carlo_pq(
    D: int,
    s: int,
    m: int,
    trials: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Monte Carlo histogram over readout indices for the cheating voter.

    Regime as :func:`analytic_pq` (D = N+1, levels (1, 0)); per trial the
    authority offset, both angle estimates, the announced r (from its exact
    protocol distribution), and the readout index are sampled. The per-trial
    readout distribution is the exact branch-amplitude expression, evaluated
    vectorized across trials, so this is the protocol simulation with the
    register bookkeeping contracted away. m enters only through its phase
    multiple, so values up to D-1 are accepted.
    """
    if not 2 * s > D or not s < D:
        raise ValueError(f"Monte Carlo regime requires D/2 < s < D (got s={s}, D={D})")
    counts = np.zeros(D, dtype=np.int64)
    if trials == 0:
        return counts
    kernel = PhasePOVM(D, 0.0)

    offset = rng.uniform(0.0, 2 * np.pi / D, size=trials)
    theta_y = 2 * np.pi / D + offset
    theta_n = offset
    th_y_est = theta_y + kernel.sample(rng, trials)
    th_n_est = theta_n + kernel.sample(rng, trials)

    # Announced r: the vote measurement pairs the uniform-magnitude ballot
    # branches with the uniform-magnitude estimate state, so every outcome
    # carries weight sum_j (1/D)(1/D) = 1/D; sample from that exact law.
    r_probs = np.full(D, 1.0 / D)
    r = np.searchsorted(np.cumsum(r_probs), rng.random(trials), side="right").clip(0, D - 1)

    alpha = s * (th_n_est - th_y_est) + m * (2 * np.pi / D) + th_n_est - theta_n
    j = np.arange(D)
    amps = np.exp(1j * np.outer(alpha, j))
    wrap = np.exp(1j * D * (th_n_est - offset))
    amps = np.where(j[None, :] < r[:, None], wrap[:, None] * amps, amps)
    probs = np.abs(np.fft.fft(amps, axis=1)) ** 2 / D**2  # <target_q|state> over q

    cum = np.cumsum(probs, axis=1)
    u = rng.random(trials)[:, None] * cum[:, -1:]
    q = (cum < u).sum(axis=1).clip(0, D - 1)
    return np.bincount(q, minlength=D)


# ---------------------------------------------------------------------------
# eavesdroppers


@dataclass
class AttackReport:
    """Aggregated attack trial statistics."""

    kind: str
    trials: int
    detected_count: int
    leak_attempts: int
    leak_correct: int
    outcome_histogram: dict[str, int] = field(default_factory=dict)
    analytic_detection: float | None = None
    statistics: dict = field(default_factory=dict)
    seed: int | None = None

    @property
    def detection_rate(self) -> float:
        return self.detected_count / self.trials if self.trials else 0.0

    @property
    def leak_accuracy(self) -> float | None:
        return self.leak_correct / self.leak_attempts if self.leak_attempts else None

    def _bump(self, key: str, n: int = 1) -> None:
        self.outcome_histogram[key] = self.outcome_histogram.get(key, 0) + n


def pair_agree_mask(D: int) -> np.ndarray:
    """Diagonal mask keeping equal computational labels on two registers."""
    m = np.zeros((D, D))
    np.fill_diagonal(m, 1.0)
    return m


def run_pair_check(state, pair: tuple[int, int], rng: np.random.Generator, backend="branch"):
    """Joint agreement test by two voters; True = ballots agree, proceed."""
    i, j = pair
    if i == j:
        raise ValueError("pair check requires two distinct registers")
    bk = get_backend(backend)
    D = bk.dims(state)[i]
    mask = pair_agree_mask(D)
    comp = np.ones((D, D)) - mask
    outcome, post, _ = bk.measure_diag(state, [i, j], [mask, comp], rng)
    return outcome == 0, post


def run_mitm_traveling(
    config: ProtocolConfig,
    votes,
    target: int,
    rng: np.random.Generator,
    backend: str = "dense",
    repair: bool = True,
    trials: int = 1,
    seed: int | None = None,
) -> AttackReport:
    """Man-in-the-middle on the traveling ballot.

    The interceptor keeps the real moving register when it heads to the
    target voter and substitutes a fresh |0> qudit; the target unknowingly
    votes on the decoy, which is then measured (|1| means yes) and, with
    ``repair``, the reading is forwarded onto the real ballot so the tally
    stays intact. Nothing in the scheme can flag this.
    """
    votes = [int(v) for v in votes]
    if len(votes) != config.N:
        raise ValueError(f"expected {config.N} votes")
    if not 0 <= target < config.N:
        raise ValueError("target out of range")
    bk = get_backend(backend)
    D = config.D
    report = AttackReport(kind="mitm-traveling", trials=trials, detected_count=0,
                          leak_attempts=0, leak_correct=0, seed=seed)
    for _ in range(trials):
        state = bk.ghz(D, 2)
        state = bk.attach(state, D, 0)  # the decoy qudit, register 2
        for voter, v in enumerate(votes):
            reg = 2 if voter == target else 1
            if v:
                state = bk.apply_local(state, reg, shift_matrix(D))
            if voter == target:
                # interceptor measures the decoy right after the target votes
                kets = [np.eye(D, dtype=complex)[:, k] for k in range(D)]
                leak, state, _ = bk.measure_local_kets(state, 2, kets, rng)
                leak = int(leak)
                report.leak_attempts += 1
                if leak == votes[target]:
                    report.leak_correct += 1
                if repair and leak:
                    state = bk.apply_local(state, 1, shift_matrix(D, leak))
        targets = [shifted_ghz(D, (0, mm)) for mm in range(D)]
        tally, _, _ = bk.measure_targets(state, targets, rng, registers=[0, 1])
        report._bump(f"tally={int(tally)}")
    report.statistics["expected_tally"] = sum(votes)
    return report


def run_swap_attack(
    config: ProtocolConfig,
    votes,
    target: int,
    pair_check: tuple[int, int] | None,
    rng: np.random.Generator,
    trials: int = 1,
    repair: bool = True,
    backend: str = "branch",
    seed: int | None = None,
) -> AttackReport:
    """Swap attack on the distributed ballot, with an optional pair check.

    The attacker swaps a uniform-superposition ancilla into the target's
    ballot slot before voting and swaps it back afterwards; the ancilla then
    carries the target's vote as a readable relative phase. A pair agreement
    check run on a pair containing the target before voting detects the
    broken symmetry with probability 1 - 1/D.

    The measurement-outcome tree is enumerated once with exact Born
    probabilities (pass/fail, the attacker's phase reading, the tally) and
    the requested number of trials is sampled from it.
    """
    votes = [int(v) for v in votes]
    if len(votes) != config.N:
        raise ValueError(f"expected {config.N} votes")
    if not 0 <= target < config.N:
        raise ValueError("target out of range")
    bk = get_backend(backend)
    D, N = config.D, config.N
    ancilla = N

    state = bk.ghz(D, N)
    state = bk.attach(state, D, phase_state(D, 0.0))  # uniform ancilla
    state = bk.swap(state, ancilla, target)

    checked = pair_check is not None and target in pair_check
    if pair_check is not None:
        if pair_check[0] == pair_check[1]:
            raise ValueError("pair check requires two distinct registers")
        p_pass, passed = bk.project_diag(state, list(pair_check), pair_agree_mask(D))
    else:
        p_pass, passed = 1.0, state

    # Continuation after a passed (or absent) check.
    branches = []  # (probability, leak reading, tally)
    if passed is not None and p_pass > 1e-14:
        st2 = passed
        for voter, v in enumerate(votes):
            if v:
                st2 = bk.apply_local(st2, voter, phase_vote_matrix(D))
        st2 = bk.swap(st2, ancilla, target)
        for y in range(D):
            p_y, st_y = bk.project_ket(st2, ancilla, phase_state(D, 2 * np.pi * y / D))
            if st_y is None or p_y <= 1e-14:
                continue
            if repair and y:
                st_y = bk.apply_local(st_y, target, phase_vote_matrix(D, y))
            st_y = bk.drop(st_y, ancilla)
            tally_probs = [
                bk.target_probability(st_y, phase_ghz(D, N, 2 * np.pi * mm / D))
                for mm in range(D)
            ]
            tally = int(np.argmax(tally_probs))
            branches.append((p_pass * p_y, y, tally))

    probs = [1.0 - p_pass] + [p for p, _, _ in branches]
    report = AttackReport(
        kind="swap",
        trials=trials,
        detected_count=0,
        leak_attempts=0,
        leak_correct=0,
        analytic_detection=(1.0 - 1.0 / D) if checked else 0.0,
        seed=seed,
    )
    for _ in range(trials):
        k = sample_index(probs, rng)
        if k == 0:
            report.detected_count += 1
            report._bump("detected")
        else:
            _, y, tally = branches[k - 1]
            report.leak_attempts += 1
            if y == votes[target]:
                report.leak_correct += 1
            report._bump(f"reading={y},tally={tally}")
    report.statistics["pass_probability"] = p_pass
    report.statistics["expected_tally"] = sum(votes)
    return report


def random_product_attack(D: int, rng: np.random.Generator) -> np.ndarray:
    """Entangling map sending |0>_E |j> to |eta_j>_E |j| with random eta_j.

    Built as a label-controlled block unitary, so it never disturbs the
    ballot register and is undetectable by the agreement check.
    """
    U = np.zeros((D * D, D * D), dtype=complex)
    for j in range(D):
        z = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
        q, r = np.linalg.qr(z)
        V = q * (np.diagonal(r) / np.abs(np.diagonal(r)))
        proj = np.zeros((D, D))
        proj[j, j] = 1.0
        U += np.kron(V, proj)
    return U


def swap_attack_unitary(D: int) -> np.ndarray:
    """The swap entangler: |0>_E |j> goes to |j>_E |0>."""
    return swap_pair_matrix(D)


def analytic_nondetection(U: np.ndarray, D: int) -> float:
    """(1/D) sum_j <phi_j| (I x |j><j|) |phi_j> for phi_j = U(|0>|j>)."""
    total = 0.0
    for j in range(D):
        phi = U[:, j].reshape(D, D)  # axes (ancilla, ballot register)
        total += float(np.sum(np.abs(phi[:, j]) ** 2))
    return total / D


def entangling_rho_e1(
    config: ProtocolConfig,
    votes,
    target: int,
    U: np.ndarray,
    backend: str = "branch",
) -> np.ndarray:
    """Reduced state on (ancilla, target register) after the attack and voting."""
    votes = [int(v) for v in votes]
    bk = get_backend(backend)
    D, N = config.D, config.N
    state = bk.ghz(D, N)
    state = bk.attach(state, D, 0)
    state = bk.apply_pair(state, (N, target), U)
    for voter, v in enumerate(votes):
        if v:
            state = bk.apply_local(state, voter, phase_vote_matrix(D))
    return bk.reduced(state, [N, target])


def run_entangling_attack(
    config: ProtocolConfig,
    votes,
    target: int,
    U: np.ndarray,
    pair: tuple[int, int],
    rng: np.random.Generator,
    trials: int = 1,
    backend: str = "branch",
    seed: int | None = None,
) -> AttackReport:
    """General entangling attack against the distributed ballot's pair check.

    The ancilla starts in |0>, is entangled with the target register by U
    before voting, and the named pair runs the agreement check. Detection
    trials are sampled from the exactly computed pass probability, which is
    also reported against the analytic column expression.
    """
    votes = [int(v) for v in votes]
    if len(votes) != config.N:
        raise ValueError(f"expected {config.N} votes")
    bk = get_backend(backend)
    D, N = config.D, config.N
    U = check_unitary(np.asarray(U, dtype=complex), D * D)
    state = bk.ghz(D, N)
    state = bk.attach(state, D, 0)
    state = bk.apply_pair(state, (N, target), U)
    p_pass, _ = bk.project_diag(state, list(pair), pair_agree_mask(D))

    report = AttackReport(
        kind="entangling",
        trials=trials,
        detected_count=0,
        leak_attempts=0,
        leak_correct=0,
        analytic_detection=1.0 - analytic_nondetection(U, D) if target in pair else None,
        seed=seed,
    )
    for _ in range(trials):
        if rng.random() < 1.0 - p_pass:
            report.detected_count += 1
            report._bump("detected")
        else:
            report._bump("passed")
    report.statistics["pass_probability"] = p_pass
    report.statistics["analytic_nondetection"] = analytic_nondetection(U, D)
    return report


def run_classical_eavesdrop(
    N: int,
    votes,
    target: int,
    rng: np.random.Generator,
    trials: int = 1,
    seed: int | None = None,
) -> AttackReport:
    """Eavesdropper on the classical zero-sum ballots: read the target's slip
    before and after; the difference is the vote, and nothing can notice."""
    votes = [int(v) for v in votes]
    if len(votes) != N:
        raise ValueError(f"expected {N} votes")
    if not 0 <= target < N:
        raise ValueError("target out of range")
    D = N + 1
    report = AttackReport(
        kind="classical-eavesdrop",
        trials=trials,
        detected_count=0,
        leak_attempts=0,
        leak_correct=0,
        analytic_detection=0.0,
        seed=seed,
    )
    for _ in range(trials):
        labels = sample_zero_sum_ballots(N, 1, rng)[0]
        before = int(labels[target])
        marked = [(int(l) + v) % D for l, v in zip(labels, votes)]
        after = marked[target]
        leak = (after - before) % D
        report.leak_attempts += 1
        if leak == votes[target]:
            report.leak_correct += 1
        tally = sum(marked) % D
        report._bump(f"tally={tally}")
    report.statistics["expected_tally"] = sum(votes)
    return report
