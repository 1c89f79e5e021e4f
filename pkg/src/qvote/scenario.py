"""Scenario file parsing and validation for the CLI runner.

Flat ``key = value`` lines under bracketed section headers ([protocol],
[secrets], [attack], [run]); lists are comma-separated, angles are radians.
Every constraint of the selected scheme is checked here, before any
simulation, and diagnostics carry the offending line or field plus the
precondition they violate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .anticheat import AuthoritySecrets
from .protocols import ProtocolConfig

SCHEMES = (
    "traveling",
    "distributed",
    "dolev",
    "broadcast",
    "survey",
    "classical-baseline",
    "anticheat-distributed",
    "anticheat-traveling",
)
ATTACK_KINDS = ("cheater", "swap", "entangling", "mitm", "classical")
BACKENDS = ("dense", "branch", "both")

_SECTION_KEYS = {
    "protocol": {"scheme", "D", "N", "votes", "yes_rate", "salaries", "sender", "message"},
    "secrets": {"yes_level", "no_level", "offset"},
    "attack": {"kind", "target", "pair", "s", "theta_mode", "entangler", "repair"},
    "run": {"backend", "seed", "trials", "repetitions"},
}


class ScenarioError(ValueError):
    """Invalid scenario document; message carries line/field context."""


@dataclass
class AttackSpec:
    kind: str
    target: int = 0
    pair: tuple[int, int] | None = None
    s: int | None = None
    theta_mode: str = "sampled"
    entangler: str = "product"
    repair: bool = True


@dataclass
class SecretsSpec:
    """Authority levels from the scenario; a missing offset is sampled at run
    time from [0, 2*pi/D) with the run's RNG."""

    yes_level: int
    no_level: int
    offset: float | None = None

    def resolve(self, D: int, rng) -> AuthoritySecrets:
        offset = self.offset
        if offset is None:
            import numpy as np

            offset = float(rng.uniform(0.0, 2 * np.pi / D))
        return AuthoritySecrets(self.yes_level, self.no_level, offset)


@dataclass
class ScenarioConfig:
    scheme: str
    D: int
    N: int
    votes: list[int] | None = None
    yes_rate: float | None = None  # per-trial iid vote sampling alternative
    salaries: list[int] | None = None
    sender: int | None = None
    message: int | None = None
    secrets: SecretsSpec | None = None
    attack: AttackSpec | None = None
    backend: str = "dense"
    seed: int = 0
    trials: int = 1
    repetitions: int = 1
    raw: dict = field(default_factory=dict)

    def protocol_config(self, scheme: str | None = None) -> ProtocolConfig:
        base = scheme or self.scheme
        if base.startswith("anticheat-"):
            base = "distributed"
        if base == "classical-baseline":
            base = "distributed"
        return ProtocolConfig(D=self.D, N=self.N, scheme=base, seed=self.seed)


def _parse_sections(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            if current not in _SECTION_KEYS:
                raise ScenarioError(f"line {lineno}: unknown section [{current}]")
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {line!r}")
        if current is None:
            raise ScenarioError(f"line {lineno}: key outside any [section]")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _SECTION_KEYS[current]:
            raise ScenarioError(f"line {lineno}: unknown key {key!r} in section [{current}]")
        if key in sections[current]:
            raise ScenarioError(f"line {lineno}: duplicate key {key!r}")
        sections[current][key] = (value, lineno)
    if "protocol" not in sections:
        raise ScenarioError("missing required section [protocol]")
    return sections


def _get(section, key, convert, default=None, required=False, where=""):
    if key not in section:
        if required:
            raise ScenarioError(f"missing required field {key!r}{where}")
        return default
    value, lineno = section[key]
    try:
        return convert(value)
    except ScenarioError:
        raise
    except Exception:
        raise ScenarioError(f"line {lineno}: field {key!r} has invalid value {value!r}") from None


def _int(v: str) -> int:
    return int(v)


def _float(v: str) -> float:
    return float(v)


def _bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(v)


def _int_list(v: str) -> list[int]:
    if not v.strip():
        return []
    return [int(x.strip()) for x in v.split(",")]


def _pair(v: str) -> tuple[int, int]:
    parts = _int_list(v)
    if len(parts) != 2:
        raise ValueError(v)
    return parts[0], parts[1]


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse and fully validate a scenario document."""
    sections = _parse_sections(text)
    proto = sections["protocol"]

    scheme = _get(proto, "scheme", str, required=True, where=" in [protocol]")
    if scheme not in SCHEMES:
        lineno = proto["scheme"][1]
        raise ScenarioError(
            f"line {lineno}: unknown scheme {scheme!r}; expected one of {', '.join(SCHEMES)}"
        )
    N = _get(proto, "N", _int, required=True, where=" in [protocol]")
    if N < 1:
        raise ScenarioError("field 'N': requires N >= 1")
    default_D = N + 1 if scheme in ("classical-baseline", "dolev") else None
    D = _get(proto, "D", _int, default=default_D)
    if D is None:
        raise ScenarioError("missing required field 'D' in [protocol]")
    if D < 2:
        raise ScenarioError("field 'D': requires D >= 2")

    votes = _get(proto, "votes", _int_list)
    yes_rate = _get(proto, "yes_rate", _float)
    salaries = _get(proto, "salaries", _int_list)
    sender = _get(proto, "sender", _int)
    message = _get(proto, "message", _int)

    secrets = None
    if "secrets" in sections:
        sec = sections["secrets"]
        secrets = SecretsSpec(
            yes_level=_get(sec, "yes_level", _int, required=True, where=" in [secrets]"),
            no_level=_get(sec, "no_level", _int, required=True, where=" in [secrets]"),
            offset=_get(sec, "offset", _float, default=None),
        )

    attack = None
    if "attack" in sections:
        att = sections["attack"]
        kind = _get(att, "kind", str, required=True, where=" in [attack]")
        if kind not in ATTACK_KINDS:
            lineno = att["kind"][1]
            raise ScenarioError(
                f"line {lineno}: unknown attack kind {kind!r}; expected one of {', '.join(ATTACK_KINDS)}"
            )
        attack = AttackSpec(
            kind=kind,
            target=_get(att, "target", _int, default=0),
            pair=_get(att, "pair", _pair),
            s=_get(att, "s", _int),
            theta_mode=_get(att, "theta_mode", str, default="sampled"),
            entangler=_get(att, "entangler", str, default="product"),
            repair=_get(att, "repair", _bool, default=True),
        )
        if attack.theta_mode not in ("sampled", "exact"):
            raise ScenarioError("field 'theta_mode': expected 'sampled' or 'exact'")
        if attack.entangler not in ("product", "swap", "identity"):
            raise ScenarioError("field 'entangler': expected 'product', 'swap', or 'identity'")

    run = sections.get("run", {})
    backend = _get(run, "backend", str, default="dense")
    if backend not in BACKENDS:
        raise ScenarioError(f"field 'backend': expected one of {', '.join(BACKENDS)}")
    seed = _get(run, "seed", _int, default=0)
    trials = _get(run, "trials", _int, default=1)
    if trials < 0:
        raise ScenarioError("field 'trials': requires trials >= 0")
    repetitions = _get(run, "repetitions", _int, default=1)
    if repetitions < 1:
        raise ScenarioError("field 'repetitions': requires repetitions >= 1")

    cfg = ScenarioConfig(
        scheme=scheme,
        D=D,
        N=N,
        votes=votes,
        yes_rate=yes_rate,
        salaries=salaries,
        sender=sender,
        message=message,
        secrets=secrets,
        attack=attack,
        backend=backend,
        seed=seed,
        trials=trials,
        repetitions=repetitions,
        raw={s: {k: v for k, (v, _) in kv.items()} for s, kv in sections.items()},
    )
    _validate(cfg)
    return cfg


def _validate(cfg: ScenarioConfig) -> None:
    scheme, D, N = cfg.scheme, cfg.D, cfg.N
    attack = cfg.attack

    def need_votes(count: int, label: str = "votes"):
        if cfg.yes_rate is not None:
            if cfg.votes is not None:
                raise ScenarioError("give either 'votes' or 'yes_rate', not both")
            if not 0.0 <= cfg.yes_rate <= 1.0:
                raise ScenarioError("field 'yes_rate': requires a probability in [0, 1]")
            if attack is not None:
                raise ScenarioError("attack scenarios need explicit 'votes'")
            return
        if cfg.votes is None:
            raise ScenarioError(f"scheme {scheme!r}: missing required field 'votes'")
        if len(cfg.votes) != count:
            raise ScenarioError(
                f"field 'votes': expected {count} entries for {label}, got {len(cfg.votes)}"
            )
        if any(v not in (0, 1) for v in cfg.votes):
            raise ScenarioError("field 'votes': entries must be 0 or 1")

    if scheme in ("traveling", "distributed"):
        relaxed = attack is not None and attack.kind in ("swap", "entangling")
        if not relaxed and D <= N:
            raise ScenarioError(f"scheme {scheme!r}: requires D > N (got D={D}, N={N})")
        need_votes(N)
    elif scheme == "dolev":
        if D != N + 1:
            raise ScenarioError(f"scheme 'dolev': requires D = N+1 (got D={D}, N={N})")
        need_votes(N)
    elif scheme == "broadcast":
        if cfg.sender is None or cfg.message is None:
            raise ScenarioError("scheme 'broadcast': requires 'sender' and 'message'")
        if not 0 <= cfg.sender < N:
            raise ScenarioError(f"field 'sender': requires 0 <= sender < N (got {cfg.sender})")
        if not 0 <= cfg.message < D:
            raise ScenarioError(f"field 'message': requires 0 <= message < D (got {cfg.message})")
    elif scheme == "survey":
        if cfg.salaries is None:
            raise ScenarioError("scheme 'survey': missing required field 'salaries'")
        if len(cfg.salaries) != N:
            raise ScenarioError(f"field 'salaries': expected {N} entries")
        if any(s < 0 for s in cfg.salaries):
            raise ScenarioError("field 'salaries': entries must be non-negative")
        if sum(cfg.salaries) >= D:
            raise ScenarioError(
                f"scheme 'survey': requires sum of votes < D (got {sum(cfg.salaries)} >= {D})"
            )
    elif scheme == "classical-baseline":
        need_votes(N)
    elif scheme in ("anticheat-distributed", "anticheat-traveling"):
        expected = N - 1 if (attack is not None and attack.kind == "cheater") else N
        need_votes(expected, label="this round")
        if cfg.secrets is not None:
            try:
                AuthoritySecrets(
                    cfg.secrets.yes_level, cfg.secrets.no_level, cfg.secrets.offset or 0.0
                ).validate(D, N)
            except ValueError as exc:
                raise ScenarioError(f"section [secrets]: {exc}") from None

    if attack is not None:
        if attack.kind == "cheater":
            if not scheme.startswith("anticheat"):
                raise ScenarioError("attack 'cheater': requires an anticheat-* scheme")
            if attack.s is None:
                raise ScenarioError("attack 'cheater': missing required field 's'")
            if attack.s < 1:
                raise ScenarioError("attack 'cheater': requires s >= 1 (s = 0 is honest)")
        elif attack.kind == "mitm":
            if scheme != "traveling":
                raise ScenarioError("attack 'mitm': requires scheme 'traveling'")
        elif attack.kind in ("swap", "entangling"):
            if scheme != "distributed":
                raise ScenarioError(f"attack {attack.kind!r}: requires scheme 'distributed'")
            if attack.kind == "entangling" and attack.pair is None:
                raise ScenarioError("attack 'entangling': missing required field 'pair'")
        elif attack.kind == "classical":
            if scheme != "classical-baseline":
                raise ScenarioError("attack 'classical': requires scheme 'classical-baseline'")
        if not 0 <= attack.target < N:
            raise ScenarioError(f"field 'target': requires 0 <= target < N (got {attack.target})")
        if attack.pair is not None:
            i, j = attack.pair
            if i == j or not (0 <= i < N and 0 <= j < N):
                raise ScenarioError("field 'pair': requires two distinct registers below N")
