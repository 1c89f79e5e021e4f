"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL line
per criterion. Each criterion is a single test; tolerances are pinned here
and nowhere else.
"""

from __future__ import annotations

import itertools
import time

import numpy as np
import pytest

from qvote.anticheat import (
    AuthoritySecrets,
    authority_readout,
    random_secrets,
    run_round,
)
from qvote.attacks import (
    analytic_pq,
    cheater_conditional_distribution,
    conditional_pq,
    entangling_rho_e1,
    monte_carlo_pq,
    random_product_attack,
    run_entangling_attack,
    run_mitm_traveling,
    run_swap_attack,
    total_variation,
)
from qvote.backends import get_backend
from qvote.branches import branch_inner, phase_ghz, shifted_ghz, to_dense
from qvote.groups import (
    cyclic_group,
    klein4,
    regular_representation,
    run_abelian_distributed,
    run_group_traveling,
    symmetric_group_3,
)
from qvote.protocols import (
    ProtocolConfig,
    run_broadcast,
    run_distributed,
    run_dolev,
    run_survey,
    run_traveling,
)
from qvote.runner import emit_report, execute
from qvote.scenario import parse_scenario
from qvote.states import align_global_phase


def _report(number: int, name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {number:02d} {name}: {status}{suffix}")
    assert ok, f"criterion {number} failed{suffix}"


def all_votes(N):
    return list(itertools.product((0, 1), repeat=N))


def test_c01_tally_correctness_sweep():
    """Exhaustive vote enumeration, five schemes, both backends, N <= 4."""
    start = time.perf_counter()
    failures = 0
    for backend in ("dense", "branch"):
        for N in range(1, 5):
            D = N + 1
            trav = ProtocolConfig(D=D, N=N, scheme="traveling", seed=1)
            dist = ProtocolConfig(D=D, N=N, scheme="distributed", seed=2)
            dol = ProtocolConfig(D=N + 1, N=N, scheme="dolev", seed=3)
            for votes in all_votes(N):
                if run_traveling(trav, votes, backend).m != sum(votes):
                    failures += 1
                if run_distributed(dist, votes, backend).m != sum(votes):
                    failures += 1
                if run_dolev(dol, votes, backend).m != sum(votes):
                    failures += 1
            bc = ProtocolConfig(D=N + 1, N=N, scheme="broadcast", seed=4)
            for sender in range(N):
                for message in range(N + 1):
                    if run_broadcast(bc, sender, message, backend).m != message:
                        failures += 1
            sv = ProtocolConfig(D=2 * N + 1, N=N, scheme="survey", seed=5)
            for sal in itertools.product((0, 1, 2), repeat=N):
                if sum(sal) < 2 * N + 1:
                    if run_survey(sv, list(sal), backend).m != sum(sal):
                        failures += 1
    elapsed = time.perf_counter() - start
    _report(
        1,
        "tally correctness sweep",
        failures == 0 and elapsed < 30.0,
        f"failures={failures}, elapsed={elapsed:.1f}s",
    )


def test_c02_privacy_invariants():
    """Single-voter reduced densities stay within 1e-12 of I/D (dense).

    The traveling ballot always has a second register to hide behind; the
    distributed and announcement schemes need N >= 2 for "the other voters'
    registers" to exist at all.
    """
    worst = 0.0
    for D, N in [(2, 1), (3, 2), (4, 3)]:
        for votes in all_votes(N):
            cfg = ProtocolConfig(D=D, N=N, scheme="traveling", seed=0)
            res = run_traveling(cfg, votes, "dense", record_privacy=True)
            worst = max(worst, max(e["trace_distance"] for e in res.transcript.privacy))
            if N < 2:
                continue
            cfg = ProtocolConfig(D=D, N=N, scheme="distributed", seed=0)
            res = run_distributed(cfg, votes, "dense", record_privacy=True)
            worst = max(worst, max(e["trace_distance"] for e in res.transcript.privacy))
            if D == N + 1:
                cfg = ProtocolConfig(D=D, N=N, scheme="dolev", seed=0)
                res = run_dolev(cfg, votes, "dense", record_privacy=True)
                worst = max(worst, max(e["trace_distance"] for e in res.transcript.privacy))
    _report(2, "privacy invariants", worst <= 1e-12, f"max trace distance={worst:.2e}")


def test_c03_orthogonality_suites():
    """Gram matrices of the tally and readout families equal the identity."""
    worst = 0.0
    for D in (2, 3, 4, 8):
        # traveling tally family: correlated pairs with shifted second register
        fam = [shifted_ghz(D, (0, m)) for m in range(D)]
        gram = np.array([[branch_inner(a, b) for b in fam] for a in fam])
        worst = max(worst, float(np.max(np.abs(gram - np.eye(D)))))
        # distributed tally family and anti-cheat readout family (phase type)
        for regs in (2, 3, 6, 2 * 6):
            fam = [phase_ghz(D, regs, 2 * np.pi * q / D) for q in range(D)]
            gram = np.array([[branch_inner(a, b) for b in fam] for a in fam])
            worst = max(worst, float(np.max(np.abs(gram - np.eye(D)))))
    _report(3, "orthogonality suites", worst <= 1e-12, f"max Gram deviation={worst:.2e}")


def test_c04_group_multiplication():
    """Klein-4 and S3 exhaustive triples; trace condition; voting special case."""
    rng = np.random.default_rng(7)
    ok = True
    group, rep = klein4()
    for choices in itertools.product(range(4), repeat=3):
        ok = ok and run_group_traveling(group, rep, choices, rng=rng) == group.product(choices)
    s3 = symmetric_group_3()
    s3rep = regular_representation(s3)
    for choices in itertools.product(range(6), repeat=3):
        ok = ok and run_group_traveling(s3, s3rep, choices, rng=rng) == s3.product(choices)
    for r in (rep, s3rep, regular_representation(cyclic_group(4))):
        for g in range(r.group.order):
            if g != r.group.identity:
                ok = ok and abs(np.trace(r.matrix(g))) <= 1e-10
    for N in range(1, 5):
        D = N + 1
        cfg = ProtocolConfig(D=D, N=N, scheme="distributed", seed=8)
        for votes in all_votes(N):
            via_group = run_abelian_distributed([D], [(v,) for v in votes], rng=rng)
            ok = ok and via_group == (run_distributed(cfg, votes).m,)
    _report(4, "group multiplication", ok)


def test_c05_anticheat_honest_determinism():
    """q = m * gap with probability 1 over vote vectors, secrets, 1e4 shots."""
    rng = np.random.default_rng(11)
    shots = 0
    ok = True
    worst_p = 1.0
    plans = [("dense", 4, n) for n in (1, 2, 3)] + [("branch", 8, 6)]
    for backend, D, N in plans:
        for votes in all_votes(N):
            for _ in range(20):
                secrets = random_secrets(D, N, rng)
                res, round_ = run_round(D, N, secrets, votes, rng, backend=backend)
                expected = sum(votes) * secrets.gap
                ok = ok and (res.q == expected) and not res.cheat_detected
                worst_p = min(worst_p, res.probability)
                shots += 1
                extra = 7 if backend == "branch" else 2
                for _ in range(extra):
                    again = authority_readout(round_, rng)
                    ok = ok and again.q == expected and not again.error_outcome
                    shots += 1
    _report(
        5,
        "anti-cheat honest determinism",
        ok and shots >= 10_000 and worst_p >= 1 - 1e-10,
        f"shots={shots}, min outcome probability={worst_p:.12f}",
    )


def test_c06_appendix_reproduction():
    """Cheater statistics at D=8, s=5: peak location, TV <= 0.02, broad support."""
    start = time.perf_counter()
    D, s = 8, 5
    ok = True
    details = []
    rng = np.random.default_rng(17)
    for m in range(8):
        counts = monte_carlo_pq(D, s, m, 100_000, rng)
        peak_ok = int(np.argmax(counts)) == (m - s) % D
        tv = total_variation(counts, analytic_pq(D, s, m))
        broad_ok = bool(np.all(counts > 0))
        ok = ok and peak_ok and tv <= 0.02 and broad_ok
        details.append(f"m={m}:tv={tv:.4f}")
    elapsed = time.perf_counter() - start
    _report(
        6,
        "appendix reproduction",
        ok and elapsed < 120.0,
        f"elapsed={elapsed:.1f}s, " + " ".join(details),
    )


def test_c07_conditional_distribution_oracle():
    """Dense conditional distribution matches the closed expression, 16x16 grid."""
    D, N, s = 4, 3, 3
    secrets = AuthoritySecrets(1, 0, 0.37)
    grid = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    worst = 0.0
    for m in range(N):
        for r in range(D):
            for ty in grid:
                for tn in grid:
                    sim = cheater_conditional_distribution(
                        D, N, secrets, m, s, float(ty), float(tn), r, backend="dense"
                    )
                    formula = conditional_pq(D, s, m, r, float(ty), float(tn), secrets)
                    worst = max(worst, float(np.max(np.abs(sim - formula))))
    _report(7, "conditional distribution oracle", worst <= 1e-10, f"max |diff|={worst:.2e}")


def test_c08_eavesdropper_statistics():
    """Swap-attack detection = 1 - 1/D within 3 sigma at 1e5 trials."""
    ok = True
    details = []
    for D in (2, 3, 4, 8):
        cfg = ProtocolConfig(D=D, N=3, scheme="distributed", seed=0)
        rng = np.random.default_rng(100 + D)
        rep = run_swap_attack(cfg, [1, 0, 1], 0, (0, 1), rng, trials=100_000)
        p = 1 - 1 / D
        sigma = np.sqrt(p * (1 - p) / rep.trials) if 0 < p < 1 else 0.0
        within = abs(rep.detection_rate - p) <= 3 * sigma if sigma else rep.detection_rate == p
        ok = ok and within
        details.append(f"D={D}:{rep.detection_rate:.4f}~{p:.4f}")
        nochk = run_swap_attack(cfg, [1, 0, 1], 0, None, rng, trials=2_000)
        ok = ok and nochk.leak_accuracy == 1.0 and nochk.detected_count == 0
    _report(8, "eavesdropper statistics", ok, " ".join(details))


def test_c09_no_leak_no_detect():
    """Undetectable attacks carry no vote information; the leaky one is caught."""
    D, N = 3, 3
    cfg = ProtocolConfig(D=D, N=N, scheme="distributed", seed=0)
    rng = np.random.default_rng(23)
    ok = True
    worst_rho = 0.0
    worst_detect = 0.0
    for _ in range(50):
        U = random_product_attack(D, rng)
        rep = run_entangling_attack(cfg, [1, 0, 1], 0, U, (0, 1), rng, trials=1)
        detect_prob = 1.0 - rep.statistics["pass_probability"]
        worst_detect = max(worst_detect, detect_prob)
        rhos = [entangling_rho_e1(cfg, votes, 0, U) for votes in all_votes(N)]
        from qvote.states import trace_distance

        for rho in rhos[1:]:
            worst_rho = max(worst_rho, trace_distance(rho, rhos[0]))
    ok = ok and worst_detect <= 1e-9 and worst_rho <= 1e-12
    # the leaky swap attack: perfect leak, detection exactly 1 - 1/D
    leak = run_swap_attack(cfg, [1, 0, 1], 0, None, rng, trials=500)
    checked = run_swap_attack(cfg, [1, 0, 1], 0, (0, 1), rng, trials=50_000)
    pass_p = checked.statistics["pass_probability"]
    ok = ok and leak.leak_accuracy == 1.0 and abs(pass_p - 1 / D) <= 1e-12
    sigma = np.sqrt((1 - 1 / D) * (1 / D) / checked.trials)
    ok = ok and abs(checked.detection_rate - (1 - 1 / D)) <= 3 * sigma
    _report(
        9,
        "no-leak/no-detect dichotomy",
        ok,
        f"max detect={worst_detect:.1e}, max rho distance={worst_rho:.1e}",
    )


def _outcomes_only(events):
    """Public transcript minus float diagnostics (probabilities)."""
    return [{k: v for k, v in e.items() if k != "probability"} for e in events]


def test_c10_backend_equivalence():
    """Dense and branch agree on amplitudes (1e-12) and outcomes at D<=4, N<=3."""
    ok = True
    worst = 0.0
    for D, N in [(2, 1), (3, 2), (4, 3)]:
        for scheme, runner in [
            ("traveling", run_traveling),
            ("distributed", run_distributed),
        ]:
            cfg = ProtocolConfig(D=D, N=N, scheme=scheme, seed=31)
            for votes in all_votes(N):
                a = runner(cfg, votes, "dense", rng=np.random.default_rng(5), record_states=True)
                b = runner(cfg, votes, "branch", rng=np.random.default_rng(5), record_states=True)
                ok = ok and a.m == b.m
                ok = ok and _outcomes_only(a.transcript.public) == _outcomes_only(b.transcript.public)
                for sa, sb in zip(a.transcript.states, b.transcript.states):
                    da = align_global_phase(sa["state"].amps)
                    db = align_global_phase(to_dense(sb["state"]).amps)
                    worst = max(worst, float(np.max(np.abs(da - db))))
        if D == N + 1:
            cfg = ProtocolConfig(D=D, N=N, scheme="dolev", seed=31)
            for votes in all_votes(N):
                a = run_dolev(cfg, votes, "dense", rng=np.random.default_rng(6))
                b = run_dolev(cfg, votes, "branch", rng=np.random.default_rng(6))
                ok = ok and _outcomes_only(a.transcript.public) == _outcomes_only(b.transcript.public)
        if D > N:
            cfg = ProtocolConfig(D=D, N=N, scheme="broadcast", seed=31)
            for sender in range(N):
                for msg in range(D):
                    a = run_broadcast(cfg, sender, msg, "dense", rng=np.random.default_rng(4))
                    b = run_broadcast(cfg, sender, msg, "branch", rng=np.random.default_rng(4))
                    ok = ok and a.m == b.m
                    ok = ok and _outcomes_only(a.transcript.public) == _outcomes_only(b.transcript.public)
        secrets = AuthoritySecrets(1, 0, 0.4)
        if secrets.gap * N < D:
            for votes in all_votes(N):
                ra, _ = run_round(D, N, secrets, votes, np.random.default_rng(7), backend="dense")
                rb, _ = run_round(D, N, secrets, votes, np.random.default_rng(7), backend="branch")
                ok = ok and (ra.q, ra.m_inferred) == (rb.q, rb.m_inferred)
    # anti-cheat intermediate states, stepped in lockstep on both backends
    from qvote.anticheat import authority_correct as ac_correct
    from qvote.anticheat import setup as ac_setup
    from qvote.anticheat import vote_distributed as ac_vote

    secrets = AuthoritySecrets(1, 0, 0.25)
    rng_a, rng_b = np.random.default_rng(77), np.random.default_rng(77)
    ra = ac_setup(4, 3, secrets, rng_a, backend="dense")
    rb = ac_setup(4, 3, secrets, rng_b, backend="branch")
    for voter, v in enumerate([1, 0, 1]):
        ac_vote(ra, voter, v, rng_a)
        ac_vote(rb, voter, v, rng_b)
        da = align_global_phase(ra.state.amps)
        db = align_global_phase(to_dense(rb.state).amps)
        worst = max(worst, float(np.max(np.abs(da - db))))
        ok = ok and ra.announced[voter] == rb.announced[voter]
    ac_correct(ra)
    ac_correct(rb)
    worst = max(
        worst,
        float(np.max(np.abs(align_global_phase(ra.state.amps) - align_global_phase(to_dense(rb.state).amps)))),
    )
    # attack reports with shared seeds agree between backends
    cfg = ProtocolConfig(D=4, N=3, scheme="distributed", seed=0)
    sa = run_swap_attack(cfg, [1, 0, 1], 0, (0, 1), np.random.default_rng(8), trials=500, backend="dense")
    sb = run_swap_attack(cfg, [1, 0, 1], 0, (0, 1), np.random.default_rng(8), trials=500, backend="branch")
    ok = ok and sa.outcome_histogram == sb.outcome_histogram
    tcfg = ProtocolConfig(D=4, N=3, scheme="traveling", seed=0)
    ma = run_mitm_traveling(tcfg, [1, 1, 0], 1, np.random.default_rng(9), backend="dense", trials=50)
    mb = run_mitm_traveling(tcfg, [1, 1, 0], 1, np.random.default_rng(9), backend="branch", trials=50)
    ok = ok and ma.outcome_histogram == mb.outcome_histogram
    _report(10, "backend equivalence", ok and worst <= 1e-12, f"max amplitude diff={worst:.2e}")


def test_c11_determinism():
    """Identical (scenario, seed) runs produce byte-identical json-lines."""
    scenarios = [
        """
[protocol]
scheme = distributed
D = 5
N = 4
votes = 1,0,1,1

[run]
backend = both
seed = 42
trials = 5
""",
        """
[protocol]
scheme = distributed
D = 4
N = 3
votes = 1,0,1

[attack]
kind = swap
target = 0
pair = 0,1

[run]
backend = branch
seed = 3
trials = 800
""",
        """
[protocol]
scheme = anticheat-traveling
D = 8
N = 3
votes = 0,1,1

[secrets]
yes_level = 2
no_level = 0
offset = 0.1

[run]
backend = branch
seed = 12
repetitions = 4
""",
    ]
    ok = True
    for text in scenarios:
        a = emit_report(execute(parse_scenario(text)), "json-lines")
        b = emit_report(execute(parse_scenario(text)), "json-lines")
        ok = ok and a == b
    _report(11, "determinism", ok)
