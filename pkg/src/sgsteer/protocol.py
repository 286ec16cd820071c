"""End-to-end steering protocol: Alice runs the Stern-Gerlach source remotely.

For each atom Alice sends a control message that fires the source, measures
with the scheduled setting in Tokyo, and sends the result to Bob in Paris.
Both messages are modeled as logical sequence numbers.

Randomness: atom ``i`` draws from stream ``(seed, i + 1)``; stream 0 drives
a randomized schedule. Atoms are therefore independent and the run is
reproducible regardless of how the atoms are batched.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import Counter
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import boxes
from .measurement import (
    DRAWS_PER_MEASUREMENT,
    Setting,
    binomial_se,
    channel,
    form_for,
    outcome_labels,
    outcome_probabilities,
    sample_from_uniforms,
)
from .numerics import DomainError, uniform_at
from .wavefunction import PhysParams, branch_kinematics

CSV_COLUMNS = (
    "atom_index", "setting", "alice_detected", "alice_value",
    "bob_form", "bob_spin", "bob_location", "seq_control", "seq_result",
)

SCHEDULE_STREAM = 0


class Model(enum.Enum):
    CONTINUOUS = "Continuous"
    BOXES = "Boxes"


@dataclass(frozen=True)
class Schedule:
    """Per-atom setting assignment.

    ``fixed`` uses ``settings[0]`` throughout, ``alternating`` cycles through
    ``settings``, ``random`` draws uniformly from ``settings`` per atom.
    """

    kind: str = "fixed"
    settings: tuple[Setting, ...] = (Setting.SPIN_Z,)

    def __post_init__(self):
        if self.kind not in ("fixed", "alternating", "random"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if not self.settings:
            raise DomainError("schedule has no settings")

    def assign(self, n_atoms: int, seed: int) -> list[Setting]:
        if self.kind == "fixed":
            return [self.settings[0]] * n_atoms
        if self.kind == "alternating":
            k = len(self.settings)
            return [self.settings[i % k] for i in range(n_atoms)]
        u = uniform_at(seed, SCHEDULE_STREAM, np.arange(n_atoms))
        picks = np.minimum((u * len(self.settings)).astype(int), len(self.settings) - 1)
        return [self.settings[j] for j in picks]


@dataclass(frozen=True)
class RunConfig:
    n_atoms: int
    schedule: Schedule = Schedule()
    evolution_time: float = 5.0
    params: PhysParams = field(default_factory=PhysParams)
    seed: int = 0
    model: Model = Model.CONTINUOUS

    def __post_init__(self):
        if not isinstance(self.n_atoms, int) or self.n_atoms < 1:
            raise DomainError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if not self.evolution_time >= 0:
            raise DomainError("evolution_time must be non-negative")
        if self.model is Model.BOXES and Setting.MOMENTUM_Z in self.schedule.settings:
            raise DomainError("the box model has no momentum setting")


@dataclass(frozen=True)
class RunRecord:
    atom_index: int
    setting: str
    alice_detected: bool
    alice_value: float
    bob_form: str
    bob_spin: str
    bob_location: str
    seq_control: int
    seq_result: int

    @property
    def bob_label(self) -> tuple[str, str, str]:
        return self.bob_form, self.bob_spin, self.bob_location

    @property
    def outcome_label(self) -> str:
        return _LABEL_BY_SPIN[(self.setting, self.bob_spin)]


_LABEL_BY_SPIN = {
    (s.value, channel(s, i).spin.value): channel(s, i).label
    for s in Setting for i in (0, 1)
}


def _record(i: int, setting: Setting, index: int, value: float) -> RunRecord:
    ch = channel(setting, index)
    return RunRecord(
        atom_index=i,
        setting=setting.value,
        alice_detected=ch.detected,
        alice_value=float(value),
        bob_form=form_for(setting).value,
        bob_spin=ch.spin.value,
        bob_location=ch.location.value,
        seq_control=2 * i,
        seq_result=2 * i + 1,
    )


def _box_first_probability(setting: Setting) -> float:
    label = outcome_labels(setting)[0]
    prob, _ = boxes.project(boxes.make_psi2(), setting, label)
    return prob


def _box_values(setting: Setting, idx: np.ndarray, t: float, p: PhysParams) -> np.ndarray:
    if setting is Setting.POSITION_Z:
        g_up, g_down = branch_kinematics(t, p)
        return np.where(idx == 0, g_down.center_z, g_up.center_z)
    plus = np.array([channel(setting, i).label == "+hbar/2" for i in (0, 1)])
    return np.where(plus[idx], 0.5 * p.hbar, -0.5 * p.hbar)


def run_records(config: RunConfig) -> list[RunRecord]:
    """Simulate every atom of ``config`` and return records in atom order."""
    assigned = config.schedule.assign(config.n_atoms, config.seed)
    atoms = np.arange(config.n_atoms)
    by_setting = np.array([s.value for s in assigned])
    t, p = config.evolution_time, config.params
    records: list[RunRecord | None] = [None] * config.n_atoms
    for setting in dict.fromkeys(assigned):
        ids = atoms[by_setting == setting.value]
        u = uniform_at(config.seed, (ids + 1)[:, None],
                       np.arange(DRAWS_PER_MEASUREMENT)[None, :])
        if config.model is Model.CONTINUOUS:
            idx, values = sample_from_uniforms(setting, t, p, u)
        else:
            idx = np.where(u[:, 0] < _box_first_probability(setting), 0, 1)
            values = _box_values(setting, idx, t, p)
        for i, k, v in zip(ids.tolist(), idx.tolist(), values.tolist()):
            records[i] = _record(i, setting, k, v)
    return records


@dataclass
class Tally:
    """Outcome counts per setting and collapse counts per side."""

    n_atoms: int
    counts: dict[str, dict[str, int]]
    sides: dict[str, int]

    def n_setting(self, setting: str) -> int:
        return sum(self.counts.get(setting, {}).values())

    def frequency(self, setting: str, label: str) -> float:
        n = self.n_setting(setting)
        return self.counts[setting].get(label, 0) / n if n else math.nan

    def standard_error(self, setting: str, label: str) -> float:
        n = self.n_setting(setting)
        return binomial_se(self.frequency(setting, label), n) if n else math.nan

    def as_dict(self) -> dict:
        out = {"n_atoms": self.n_atoms, "sides": dict(self.sides), "settings": {}}
        for s, c in self.counts.items():
            out["settings"][s] = {
                "n": self.n_setting(s),
                "counts": dict(c),
                "frequencies": {k: self.frequency(s, k) for k in c},
                "standard_errors": {k: self.standard_error(s, k) for k in c},
            }
        return out


def tally_statistics(records: list[RunRecord]) -> Tally:
    if not records:
        raise DomainError("cannot tally an empty run")
    counts: dict[str, Counter] = {}
    for r in records:
        counts.setdefault(r.setting, Counter())[r.outcome_label] += 1
    # every outcome label appears, even with count zero
    full = {}
    for s, c in counts.items():
        full[s] = {label: c.get(label, 0) for label in outcome_labels(Setting(s))}
    sides = Counter(r.bob_location for r in records)
    return Tally(len(records), full, {k: sides.get(k, 0) for k in ("Tokyo", "Paris", "Delocalized")})


def run_experiment(config: RunConfig) -> tuple[list[RunRecord], Tally]:
    records = run_records(config)
    return records, tally_statistics(records)


def expected_probabilities(config: RunConfig, setting: Setting) -> dict[str, float]:
    if config.model is Model.BOXES:
        state = boxes.make_psi2()
        return {label: boxes.project(state, setting, label)[0] for label in outcome_labels(setting)}
    return dict(outcome_probabilities(setting, config.evolution_time, config.params))


@dataclass(frozen=True)
class ConformanceCheck:
    setting: str
    outcome: str
    expected: float
    observed: float
    n: int
    z_score: float
    passed: bool


def conformance(config: RunConfig, tally: Tally, n_sigma: float = 5.0) -> list[ConformanceCheck]:
    """Compare empirical frequencies with Born probabilities at ``n_sigma``.

    The standard error uses the expected probability, so a certain outcome
    (p = 0 or 1) must be matched exactly.
    """
    checks = []
    for s in tally.counts:
        n = tally.n_setting(s)
        for label, prob in expected_probabilities(config, Setting(s)).items():
            obs = tally.frequency(s, label)
            se = binomial_se(prob, n)
            if se == 0:
                z = 0.0 if obs == prob else math.inf
            else:
                z = (obs - prob) / se
            checks.append(ConformanceCheck(s, label, prob, obs, n, z, abs(z) <= n_sigma))
    return checks


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def serialize_records(records: list[RunRecord], fmt: str = "csv") -> bytes:
    """Encode records as CSV (columns ``CSV_COLUMNS``) or JSON lines."""
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        return buf.getvalue().encode("utf-8")
    if fmt in ("json", "jsonl"):
        lines = [json.dumps(asdict(r), allow_nan=False) for r in records]
        return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")
    raise ValueError(f"unknown format {fmt!r}")


_FIELD_TYPES = {f.name: f.type for f in fields(RunRecord)}


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    if kind == "bool":
        if raw not in ("0", "1"):
            raise ValueError(f"bad boolean {raw!r} in column {name}")
        return raw == "1"
    return raw


def parse_records(data: bytes, fmt: str = "csv") -> list[RunRecord]:
    text = data.decode("utf-8")
    if fmt == "csv":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {header}")
        return [RunRecord(**{c: _coerce(c, v) for c, v in zip(CSV_COLUMNS, row)}) for row in reader]
    if fmt in ("json", "jsonl"):
        return [RunRecord(**json.loads(line)) for line in text.splitlines() if line.strip()]
    raise ValueError(f"unknown format {fmt!r}")
