"""Two-box (path x spin) model of single-particle entanglement.

Basis order: Paris-up, Paris-down, Tokyo-up, Tokyo-down. After the box is
split the particle is in (|Paris, up> + |Tokyo, down>)/sqrt(2); Alice, in
Tokyo, can open her box (path measurement) or read the spin along z or x.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .measurement import Setting
from .numerics import DomainError

_R = 1.0 / math.sqrt(2.0)
_SPIN_VECTORS = {
    "up_z": np.array([1.0, 0.0], dtype=complex),
    "down_z": np.array([0.0, 1.0], dtype=complex),
    "up_x": np.array([_R, _R], dtype=complex),
    "down_x": np.array([_R, -_R], dtype=complex),
}
_PATH_VECTORS = {
    "paris": np.array([1.0, 0.0], dtype=complex),
    "tokyo": np.array([0.0, 1.0], dtype=complex),
}
_I2 = np.eye(2, dtype=complex)


def _proj(v: np.ndarray) -> np.ndarray:
    return np.outer(v, v.conj())


# outcome label -> projector on the 4-dim space, per setting
PROJECTORS: dict[Setting, dict[str, np.ndarray]] = {
    Setting.POSITION_Z: {
        "tokyo": np.kron(_proj(_PATH_VECTORS["tokyo"]), _I2),
        "paris": np.kron(_proj(_PATH_VECTORS["paris"]), _I2),
    },
    Setting.SPIN_Z: {
        "-hbar/2": np.kron(_I2, _proj(_SPIN_VECTORS["down_z"])),
        "+hbar/2": np.kron(_I2, _proj(_SPIN_VECTORS["up_z"])),
    },
    Setting.SPIN_X: {
        "+hbar/2": np.kron(_I2, _proj(_SPIN_VECTORS["up_x"])),
        "-hbar/2": np.kron(_I2, _proj(_SPIN_VECTORS["down_x"])),
    },
}
BOX_SETTINGS = tuple(PROJECTORS)


@dataclass(frozen=True)
class PathSpinState:
    """Pure state over {Paris, Tokyo} x {up, down}.

    ``split=False`` marks the pre-split single box, stored in the Paris slot.
    """

    amplitudes: np.ndarray
    split: bool = True

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex).reshape(4)
        if abs(np.vdot(a, a).real - 1.0) > 1e-12:
            raise DomainError(f"state must have unit norm, got {np.vdot(a, a).real}")
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def product(cls, path: np.ndarray, spin: np.ndarray) -> "PathSpinState":
        v = np.kron(path, spin)
        return cls(v / np.linalg.norm(v))

    def density(self) -> np.ndarray:
        return _proj(self.amplitudes)


def make_psi1() -> PathSpinState:
    """The particle in the original, undivided box with spin along +x."""
    return PathSpinState(np.array([_R, _R, 0.0, 0.0]), split=False)


def make_psi2() -> PathSpinState:
    """(|Paris, up> + |Tokyo, down>)/sqrt(2)."""
    return PathSpinState(np.array([_R, 0.0, 0.0, _R]))


def partial_trace(rho: np.ndarray, keep: str) -> np.ndarray:
    """Reduce a 4x4 path-spin operator to ``keep`` = ``"path"`` or ``"spin"``."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    if keep == "path":
        return np.einsum("ajbj->ab", r)
    if keep == "spin":
        return np.einsum("jajb->ab", r)
    raise ValueError(f"keep must be 'path' or 'spin', got {keep!r}")


def project(state: PathSpinState, setting: Setting, outcome: str) -> tuple[float, PathSpinState | None]:
    """Born probability and renormalized post-measurement state.

    A zero-probability outcome returns ``(0.0, None)``.
    """
    try:
        P = PROJECTORS[setting][outcome]
    except KeyError:
        raise DomainError(f"no outcome {outcome!r} for {setting.value} in the box model") from None
    v = P @ state.amplitudes
    prob = float(np.vdot(v, v).real)
    if prob < 1e-15:
        return 0.0, None
    return prob, PathSpinState(v / math.sqrt(prob), split=state.split)


@dataclass(frozen=True)
class Member:
    outcome: str
    probability: float
    rho: np.ndarray


@dataclass(frozen=True)
class Assemblage:
    setting: Setting
    members: tuple[Member, ...]

    def average(self) -> np.ndarray:
        """Outcome-weighted mixture of the member states."""
        return sum((m.probability * m.rho for m in self.members), np.zeros((4, 4), dtype=complex))

    def marginal(self, keep: str = "path") -> np.ndarray:
        """Reduced mixture; ``keep="full"`` returns the whole 4x4 mixture."""
        if keep == "full":
            return self.average()
        return partial_trace(self.average(), keep)

    @property
    def total_probability(self) -> float:
        return sum(m.probability for m in self.members)


def assemblage(state: PathSpinState, setting: Setting) -> Assemblage:
    members = []
    for outcome in PROJECTORS[setting]:
        prob, post = project(state, setting, outcome)
        rho = post.density() if post is not None else np.zeros((4, 4), dtype=complex)
        members.append(Member(outcome, prob, rho))
    return Assemblage(setting, tuple(members))


def assemblage_deviation(assemblages, keep: str = "path") -> float:
    """Largest entrywise gap between the averaged marginals of any two assemblages."""
    marginals = [a.marginal(keep) for a in assemblages]
    if len(marginals) < 2:
        raise DomainError("need at least two assemblages to compare")
    return max(float(np.max(np.abs(m1 - m2)))
               for m1, m2 in itertools.combinations(marginals, 2))


def nonsignaling_check(state: PathSpinState, settings=BOX_SETTINGS, keep: str = "path") -> float:
    """Max deviation between setting-averaged marginals of ``state``.

    The comparison is made on the reduced state of ``keep`` (the path by
    default, or ``"spin"``). ``keep="full"`` compares the whole 4x4 Lueders
    mixtures, which are not setting-independent: a spin-x readout leaves
    path-spin coherences of size 1/4 that a path readout removes.
    """
    settings = list(settings)
    if len(settings) < 2:
        raise DomainError("need at least two settings")
    return assemblage_deviation([assemblage(state, s) for s in settings], keep)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of ``rho - sigma`` (exact Hermitian eigendecomposition)."""
    diff = np.asarray(rho) - np.asarray(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def pure_trace_distance(psi: np.ndarray, phi: np.ndarray) -> float:
    """Closed form ``sqrt(1 - |<psi|phi>|^2)`` for two pure states."""
    f = abs(np.vdot(psi, phi)) ** 2
    return math.sqrt(max(0.0, 1.0 - f))


def trace_distance_matrix(a1: Assemblage, a2: Assemblage) -> np.ndarray:
    """Pairwise trace distances between members with non-zero probability."""
    m1 = [m for m in a1.members if m.probability > 0]
    m2 = [m for m in a2.members if m.probability > 0]
    return np.array([[trace_distance(x.rho, y.rho) for y in m2] for x in m1])


def steering_distinguishability(a1: Assemblage, a2: Assemblage) -> float:
    """Max over members of ``a1`` of the trace distance to the closest member of ``a2``."""
    return float(np.max(np.min(trace_distance_matrix(a1, a2), axis=1)))


def is_pure(rho: np.ndarray, tol: float = 1e-10) -> bool:
    return abs(float(np.trace(rho @ rho).real) - 1.0) < tol


def is_density_matrix(rho: np.ndarray, tol: float = 1e-10) -> bool:
    rho = np.asarray(rho)
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        return False
    tr = float(np.trace(rho).real)
    return -tol <= tr <= 1.0 + tol and float(np.min(np.linalg.eigvalsh(rho))) >= -tol
