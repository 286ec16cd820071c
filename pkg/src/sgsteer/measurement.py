"""Projective measurements on the Stern-Gerlach state and their collapse.

Alice's four settings are position along z, spin along z, spin along x and
momentum along z. Her detectors sit on the Tokyo (down_z) branch; when the
particle takes the Paris branch her device registers nothing, and that null
result still collapses the state onto the Paris branch.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .numerics import DomainError, RngStream, box_muller
from .wavefunction import (
    BranchGeometry,
    PhysParams,
    branch_geometry,
    branch_kinematics,
    branch_overlap,
    branch_phi,
    momentum_sd,
)

# |1 +/- Re<phi+|phi->| below this makes the spin-x post-state unnormalizable
SEPARABILITY_THRESHOLD = 1e-10

# uniforms consumed per measurement: outcome choice + one Box-Muller pair
DRAWS_PER_MEASUREMENT = 3


class Setting(enum.Enum):
    POSITION_Z = "PositionZ"
    SPIN_Z = "SpinZ"
    SPIN_X = "SpinX"
    MOMENTUM_Z = "MomentumZ"

    @classmethod
    def parse(cls, text: str) -> "Setting":
        key = text.replace("_", "").replace("-", "").lower()
        for s in cls:
            if s.value.lower() == key:
                return s
        raise ValueError(f"unknown setting {text!r}; choose from "
                         f"{', '.join(s.value for s in cls)}")


class Form(enum.Enum):
    POSITION_EIGENSTATE = "PositionEigenstate"
    SINGLE_BRANCH_GAUSSIAN = "SingleBranchGaussian"
    BRANCH_SUPERPOSITION = "BranchSuperposition"
    MOMENTUM_EIGENSTATE = "MomentumEigenstate"


class SpinLabel(enum.Enum):
    UP_Z = "up_z"
    DOWN_Z = "down_z"
    UP_X = "up_x"
    DOWN_X = "down_x"


class Location(enum.Enum):
    TOKYO = "Tokyo"
    PARIS = "Paris"
    DELOCALIZED = "Delocalized"


class Channel(NamedTuple):
    label: str
    spin: SpinLabel
    location: Location
    detected: bool
    branch: str          # "+" (up_z), "-" (down_z) or "+-" for a superposition
    relative_sign: int   # only meaningful for superpositions


# Index 0 is the outcome chosen when u < P(index 0).
_CHANNELS: dict[Setting, tuple[Channel, Channel]] = {
    Setting.POSITION_Z: (
        Channel("tokyo", SpinLabel.DOWN_Z, Location.TOKYO, True, "-", 0),
        Channel("paris", SpinLabel.UP_Z, Location.PARIS, False, "+", 0),
    ),
    Setting.SPIN_Z: (
        Channel("-hbar/2", SpinLabel.DOWN_Z, Location.TOKYO, True, "-", 0),
        Channel("+hbar/2", SpinLabel.UP_Z, Location.PARIS, False, "+", 0),
    ),
    Setting.SPIN_X: (
        Channel("+hbar/2", SpinLabel.UP_X, Location.DELOCALIZED, True, "+-", 1),
        Channel("-hbar/2", SpinLabel.DOWN_X, Location.DELOCALIZED, True, "+-", -1),
    ),
    Setting.MOMENTUM_Z: (
        Channel("+p_z", SpinLabel.DOWN_Z, Location.TOKYO, True, "-", 0),
        Channel("-p_z", SpinLabel.UP_Z, Location.PARIS, False, "+", 0),
    ),
}

_FORMS = {
    Setting.POSITION_Z: Form.POSITION_EIGENSTATE,
    Setting.SPIN_Z: Form.SINGLE_BRANCH_GAUSSIAN,
    Setting.SPIN_X: Form.BRANCH_SUPERPOSITION,
    Setting.MOMENTUM_Z: Form.MOMENTUM_EIGENSTATE,
}


def channel(setting: Setting, index: int) -> Channel:
    """Static description of outcome ``index`` of ``setting``."""
    return _CHANNELS[setting][index]


def outcome_labels(setting: Setting) -> tuple[str, str]:
    return tuple(ch.label for ch in _CHANNELS[setting])


@dataclass(frozen=True)
class Outcome:
    """What Alice's device reports.

    ``value`` is the eigenvalue of the collapsed state (a z position, +/- hbar/2,
    or a momentum). When ``detected_locally`` is False Alice saw nothing and
    the value is the one the collapse implies on the Paris side.
    """

    setting: Setting
    label: str
    value: float
    detected_locally: bool

    def __post_init__(self):
        if self.setting in (Setting.SPIN_Z, Setting.SPIN_X) and self.label not in ("+hbar/2", "-hbar/2"):
            raise DomainError(f"spin outcome must be +/-hbar/2, got {self.label!r}")


@dataclass(frozen=True)
class CollapsedState:
    """Post-measurement state descriptor.

    Position and momentum eigenstates are kept symbolic: ``eigenvalue`` holds
    the delta location (or momentum) and ``branches`` the branch it came from.
    A superposition carries both branches and ``relative_sign``.
    """

    form: Form
    spin_label: SpinLabel
    location: Location
    t: float
    params: PhysParams
    branches: tuple[BranchGeometry, ...]
    relative_sign: int = 0
    eigenvalue: float | None = None

    def __post_init__(self):
        if self.form in (Form.POSITION_EIGENSTATE, Form.MOMENTUM_EIGENSTATE) and self.eigenvalue is None:
            raise DomainError(f"{self.form.value} needs a definite eigenvalue")
        if self.form is Form.BRANCH_SUPERPOSITION and (self.relative_sign not in (1, -1) or len(self.branches) != 2):
            raise DomainError("a branch superposition needs both branches and a sign")

    @property
    def label(self) -> tuple[str, str, str]:
        return self.form.value, self.spin_label.value, self.location.value

    @property
    def normalizable(self) -> bool:
        return self.form in (Form.SINGLE_BRANCH_GAUSSIAN, Form.BRANCH_SUPERPOSITION)


def _spin_x_plus_probability(t: float, p: PhysParams) -> float:
    return min(1.0, max(0.0, 0.5 * (1.0 + branch_overlap(t, p).real)))


def outcome_probabilities(setting: Setting, t: float,
                          p: PhysParams = PhysParams()) -> list[tuple[str, float]]:
    """Born-rule probabilities of each outcome, in channel order."""
    if setting is Setting.SPIN_X:
        p0 = _spin_x_plus_probability(t, p)
    else:
        branch_geometry("+", t, p)  # validates t
        p0 = 0.5
    a, b = outcome_labels(setting)
    return [(a, p0), (b, 1.0 - p0)]


def form_for(setting: Setting) -> Form:
    return _FORMS[setting]


def _first_probability(setting: Setting, t: float, p: PhysParams) -> float:
    return _spin_x_plus_probability(t, p) if setting is Setting.SPIN_X else 0.5


def sample_from_uniforms(setting: Setting, t: float, p: PhysParams, u: np.ndarray):
    """Outcome indices and eigenvalues from an ``(n, 3)`` array of uniforms.

    Column 0 picks the outcome, columns 1-2 feed Box-Muller for the
    continuous eigenvalue (unused but still consumed for spin settings).
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    idx = np.where(u[:, 0] < _first_probability(setting, t, p), 0, 1)
    if setting in (Setting.SPIN_Z, Setting.SPIN_X):
        plus = np.array([ch.label == "+hbar/2" for ch in _CHANNELS[setting]])
        values = np.where(plus[idx], 0.5 * p.hbar, -0.5 * p.hbar)
        return idx, values
    g_up, g_down = branch_kinematics(t, p)
    normal = box_muller(u[:, 1], u[:, 2])
    down = idx == 0  # index 0 is the Tokyo / down_z branch for these settings
    if setting is Setting.POSITION_Z:
        mean = np.where(down, g_down.center_z, g_up.center_z)
        sd = g_up.position_sd
    else:
        mean = np.where(down, g_down.mean_momentum_z, g_up.mean_momentum_z)
        sd = momentum_sd(p)
    return idx, mean + sd * normal


def collapsed_state(setting: Setting, index: int, value: float, t: float,
                    p: PhysParams = PhysParams()) -> CollapsedState:
    """Build the post-measurement descriptor for outcome ``index`` of ``setting``."""
    ch = _CHANNELS[setting][index]
    if ch.branch == "+-":
        r = branch_overlap(t, p).real
        if abs(1.0 + ch.relative_sign * r) <= SEPARABILITY_THRESHOLD:
            raise DomainError(
                f"spin-x outcome {ch.label} has zero norm at t={t}; branches not yet separated")
        branches = branch_kinematics(t, p)
    else:
        branches = (branch_geometry(ch.branch, t, p),)
    eigen = float(value) if _FORMS[setting] in (Form.POSITION_EIGENSTATE, Form.MOMENTUM_EIGENSTATE) else None
    return CollapsedState(_FORMS[setting], ch.spin, ch.location, t, p, branches,
                          ch.relative_sign, eigen)


def make_outcome(setting: Setting, index: int, value: float) -> Outcome:
    ch = _CHANNELS[setting][index]
    return Outcome(setting, ch.label, float(value), ch.detected)


def measure(setting: Setting, t: float, p: PhysParams, rng: RngStream) -> tuple[Outcome, CollapsedState]:
    """Sample one outcome and collapse the state accordingly.

    Consumes exactly three uniforms from ``rng``.
    """
    u = rng.uniforms(DRAWS_PER_MEASUREMENT).reshape(1, DRAWS_PER_MEASUREMENT)
    idx, values = sample_from_uniforms(setting, t, p, u)
    i, v = int(idx[0]), float(values[0])
    return make_outcome(setting, i, v), collapsed_state(setting, i, v, t, p)


def sample_outcomes(setting: Setting, t: float, p: PhysParams, rng: RngStream,
                    n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n`` successive measurements as arrays ``(labels, values)``.

    Draws exactly what ``n`` calls of :func:`measure` would draw.
    """
    u = rng.uniforms(DRAWS_PER_MEASUREMENT * n).reshape(n, DRAWS_PER_MEASUREMENT)
    idx, values = sample_from_uniforms(setting, t, p, u)
    labels = np.array(outcome_labels(setting))[idx]
    return labels, values


def remote_collapse(setting: Setting, local_outcome_absent: bool, t: float,
                    p: PhysParams = PhysParams()) -> CollapsedState:
    """State at Paris after Alice's Tokyo detector registers nothing."""
    if not local_outcome_absent:
        raise DomainError("remote collapse describes the null-detection channel only")
    if setting is Setting.SPIN_X:
        raise DomainError("spin-x has no null-detection channel; both outcomes fire at Alice's device")
    g = branch_geometry("+", t, p)
    if setting is Setting.POSITION_Z:
        value = g.center_z
    elif setting is Setting.MOMENTUM_Z:
        value = g.mean_momentum_z
    else:
        value = 0.5 * p.hbar
    return collapsed_state(setting, 1, value, t, p)


def steered_pdf(collapsed: CollapsedState, z):
    """Position density of a normalizable collapsed state."""
    if not collapsed.normalizable:
        raise DomainError(f"{collapsed.form.value} is not square-integrable; "
                          "use its eigenvalue and branch instead")
    t, p = collapsed.t, collapsed.params
    if collapsed.form is Form.SINGLE_BRANCH_GAUSSIAN:
        return np.abs(branch_phi(collapsed.branches[0].sign, z, t, p)) ** 2
    s = collapsed.relative_sign
    r = branch_overlap(t, p).real
    norm = 2.0 * (1.0 + s * r)
    if abs(norm) <= 2.0 * SEPARABILITY_THRESHOLD:
        raise DomainError("superposition has vanishing norm")
    amp = branch_phi("+", z, t, p) + s * branch_phi("-", z, t, p)
    return np.abs(amp) ** 2 / norm


def binomial_se(prob: float, n: int) -> float:
    return math.sqrt(max(prob * (1.0 - prob), 0.0) / n)
