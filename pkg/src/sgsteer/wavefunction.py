"""Entangled Stern-Gerlach spinor wavefunction.

After a time ``t`` in a field ``B0 + b z`` the state of a particle released
at rest as a Gaussian of width ``sigma0`` is

    psi = C0 M(x, y) [ phi_plus(z) |up_z> + phi_minus(z) |down_z> ]

with the two z-branches

    phi_plus  = exp(-i t mu (B0 + b z)/hbar) exp(-(z + t^2 mu b/2m)^2 / 4A)
    phi_minus = exp(+i t mu (B0 + b z)/hbar) exp(-(z - t^2 mu b/2m)^2 / 4A)

and ``A = sigma0^2 + i t hbar/2m``.

Sign conventions (fixed once, used everywhere):

==========  ==============  ===================  ================  ======
spin        branch          centre               mean momentum     side
==========  ==============  ===================  ================  ======
up_z        phi_plus        -t^2 mu b / 2m       -mu b t           Paris
down_z      phi_minus       +t^2 mu b / 2m       +mu b t           Tokyo
==========  ==============  ===================  ================  ======

Every amplitude returned here is normalized from closed-form Gaussian
integrals; the literal prefactor ``C0`` is only used in
:func:`normalization_report` as a cross-check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, fields
from typing import Literal

import numpy as np

from .numerics import DomainError, gaussian_norm_sq, gaussian_overlap_analytic

Sign = Literal["+", "-"]
TransverseVariant = Literal["real_denominator", "imaginary_denominator"]


@dataclass(frozen=True)
class PhysParams:
    """Physical constants in one coherent unit system (defaults: hbar = m = 1)."""

    mu_c: float = 1.0
    b: float = 1.0
    B0: float = 0.0
    m: float = 1.0
    sigma0: float = 1.0
    hbar: float = 1.0
    k_y: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{f.name} must be a finite number, got {v!r}")
        if self.m <= 0:
            raise DomainError("m must be positive")
        if self.sigma0 <= 0:
            raise DomainError("sigma0 must be positive")
        if self.hbar <= 0:
            raise DomainError("hbar must be positive")

    @classmethod
    def silver_like(cls) -> "PhysParams":
        """SI magnitudes resembling a silver atom in a lab Stern-Gerlach magnet."""
        return cls(
            mu_c=9.2740100783e-24,   # Bohr magneton, J/T
            b=1.0e3,                  # T/m
            B0=0.1,                   # T
            m=107.8682 * 1.66053906660e-27,
            sigma0=1.0e-5,            # m
            hbar=1.054571817e-34,
            k_y=0.0,
        )

    def accel(self) -> float:
        """``mu_c b / m``; the centre of each branch is ``-/+ accel t^2 / 2``."""
        return self.mu_c * self.b / self.m

    def spread_time(self, t: float) -> float:
        """``t hbar / 2m``, the imaginary part of the complex width."""
        return t * self.hbar / (2.0 * self.m)


def _check_time(t: float) -> None:
    if not t >= 0:
        raise DomainError(f"time must be non-negative, got {t}")


def _sgn(sign: Sign) -> int:
    if sign == "+":
        return 1
    if sign == "-":
        return -1
    raise DomainError(f"branch sign must be '+' or '-', got {sign!r}")


@dataclass(frozen=True)
class BranchGeometry:
    """Closed-form description of one spin branch at time ``t``.

    ``global_phase`` is the constant phase of the branch (from the uniform
    field ``B0``); ``norm_const`` is the factor that makes the literal branch
    expression unit-normalized.
    """

    sign: Sign
    center_z: float
    mean_momentum_z: float
    complex_width: complex
    global_phase: complex
    norm_const: float

    @property
    def inverse_width(self) -> complex:
        return 1.0 / (4.0 * self.complex_width)

    @property
    def position_sd(self) -> float:
        """Standard deviation of ``|phi|^2`` in z."""
        A = self.complex_width
        return abs(A) / math.sqrt(A.real)


def branch_geometry(sign: Sign, t: float, p: PhysParams) -> BranchGeometry:
    _check_time(t)
    s = _sgn(sign)
    A = complex(p.sigma0 ** 2, p.spread_time(t))
    center = -s * 0.5 * p.accel() * t * t
    momentum = -s * p.mu_c * p.b * t
    phase = cmath.exp(-1j * s * t * p.mu_c * p.B0 / p.hbar)
    norm_sq = gaussian_norm_sq(1.0 / (4.0 * A), center / (2.0 * A), -center * center / (4.0 * A))
    return BranchGeometry(sign, center, momentum, A, phase, 1.0 / math.sqrt(norm_sq))


def branch_kinematics(t: float, p: PhysParams = PhysParams()) -> tuple[BranchGeometry, BranchGeometry]:
    """Geometry of the (up_z, down_z) branches at time ``t``."""
    return branch_geometry("+", t, p), branch_geometry("-", t, p)


def _raw_branch(g: BranchGeometry, z, p: PhysParams):
    z = np.asarray(z, dtype=float)
    k = g.mean_momentum_z / p.hbar
    return g.global_phase * np.exp(1j * k * z - (z - g.center_z) ** 2 / (4.0 * g.complex_width))


def branch_phi(sign: Sign, z, t: float, p: PhysParams = PhysParams()):
    """Unit-normalized branch amplitude ``phi_plus`` (up_z) or ``phi_minus`` (down_z).

    Accepts scalar or array ``z``.
    """
    g = branch_geometry(sign, t, p)
    out = g.norm_const * _raw_branch(g, z, p)
    return complex(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Transverse factor
# ---------------------------------------------------------------------------

def _transverse_coeffs(t: float, p: PhysParams, variant: TransverseVariant):
    """Quadratic-form coefficients of M(x, y) = exp(-a(x^2+y^2) + beta y + gamma)."""
    s2 = p.sigma0 ** 2
    tau = p.spread_time(t)
    A = complex(s2, tau)
    if variant == "real_denominator":
        D = complex(tau, 0.0)
    elif variant == "imaginary_denominator":
        D = complex(0.0, tau)
    else:
        raise DomainError(f"unknown transverse variant {variant!r}")
    a = 1.0 / (4.0 * A)
    beta = s2 * p.k_y / (s2 + D)
    gamma = -s2 * p.k_y ** 2 + 4.0 * s2 * s2 * p.k_y ** 2 / (4.0 * A)
    return a, beta, gamma


def transverse_norm(t: float, p: PhysParams, variant: TransverseVariant = "real_denominator") -> float:
    """L2 norm of the literal transverse factor M over the (x, y) plane."""
    a, beta, gamma = _transverse_coeffs(t, p, variant)
    return math.sqrt(gaussian_norm_sq(a) * gaussian_norm_sq(a, beta, gamma))


def transverse_factor(x, y, t: float, p: PhysParams = PhysParams(),
                      variant: TransverseVariant = "real_denominator", normalized: bool = True):
    """M(x, y), optionally divided by its L2 norm.

    ``variant="real_denominator"`` keeps a real denominator in the
    ``y``-linear exponent; ``"imaginary_denominator"`` puts ``i t hbar/2m`` there,
    which makes M an exact free evolution. At ``k_y = 0`` both coincide.
    """
    _check_time(t)
    a, beta, gamma = _transverse_coeffs(t, p, variant)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.exp(-a * (x * x + y * y) + beta * y + gamma)
    if normalized:
        out = out / transverse_norm(t, p, variant)
    return out


# ---------------------------------------------------------------------------
# Full state
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpinorAmplitude:
    """Coefficients of |up_z> and |down_z> at one point (scalars or arrays)."""

    up: complex
    down: complex

    @property
    def density(self):
        return np.abs(self.up) ** 2 + np.abs(self.down) ** 2

    def in_x_basis(self) -> tuple[complex, complex]:
        """Coefficients of (|up_x>, |down_x>)."""
        r = 1.0 / math.sqrt(2.0)
        return r * (self.up + self.down), r * (self.up - self.down)


def literal_c0(t: float, p: PhysParams) -> complex:
    """The closed-form three-dimensional prefactor C0 of the state."""
    A = complex(p.sigma0 ** 2, p.spread_time(t))
    phase = cmath.exp(-1j * t ** 3 * p.mu_c ** 2 * p.b ** 2 / (6.0 * p.m * p.hbar))
    return (phase / math.sqrt(2.0) * (p.sigma0 / math.sqrt(2.0 * math.pi)) ** 1.5
            * A ** -1.5)


def _state_phase(t: float, p: PhysParams, dims: int) -> complex:
    # phase of the literal prefactor restricted to `dims` Cartesian factors
    A = complex(p.sigma0 ** 2, p.spread_time(t))
    chirp = -t ** 3 * p.mu_c ** 2 * p.b ** 2 / (6.0 * p.m * p.hbar)
    return cmath.exp(1j * (chirp - 0.5 * dims * cmath.phase(A)))


def evaluate_state(x, y, z, t: float, p: PhysParams = PhysParams(),
                   variant: TransverseVariant = "real_denominator") -> SpinorAmplitude:
    """Spinor amplitude of the full 3-D state at ``(x, y, z)``.

    The result has unit norm over space and spin; its overall phase is that
    of the literal prefactor C0.
    """
    g_up, g_down = branch_kinematics(t, p)
    pref = _state_phase(t, p, 3) / math.sqrt(2.0) * transverse_factor(x, y, t, p, variant)
    up = pref * g_up.norm_const * _raw_branch(g_up, z, p)
    down = pref * g_down.norm_const * _raw_branch(g_down, z, p)
    return SpinorAmplitude(up, down)


def evaluate_z_spinor(z, t: float, p: PhysParams = PhysParams()) -> SpinorAmplitude:
    """The z-restricted spinor (transverse factor stripped), unit norm over z and spin."""
    g_up, g_down = branch_kinematics(t, p)
    pref = _state_phase(t, p, 1) / math.sqrt(2.0)
    return SpinorAmplitude(pref * g_up.norm_const * _raw_branch(g_up, z, p),
                           pref * g_down.norm_const * _raw_branch(g_down, z, p))


def position_pdf_z(z, t: float, p: PhysParams = PhysParams()):
    """Marginal z-density ``(total, up_part, down_part)``; each part integrates to 1/2."""
    up = 0.5 * np.abs(branch_phi("+", z, t, p)) ** 2
    down = 0.5 * np.abs(branch_phi("-", z, t, p)) ** 2
    return up + down, up, down


def branch_overlap(t: float, p: PhysParams = PhysParams()) -> complex:
    """``<phi_plus|phi_minus>`` over z, both branches unit-normalized."""
    g_up, g_down = branch_kinematics(t, p)
    ov = gaussian_overlap_analytic(
        g_up.center_z, g_down.center_z, g_up.inverse_width, g_down.inverse_width,
        g_up.mean_momentum_z / p.hbar, g_down.mean_momentum_z / p.hbar,
    )
    return g_up.global_phase.conjugate() * g_down.global_phase * ov


def momentum_amplitude(sign: Sign, p_z, t: float, p: PhysParams = PhysParams()):
    """Momentum-space branch amplitude.

    Fourier convention ``phi(p) = (2 pi hbar)^-1/2 \\int exp(-i p z/hbar) phi(z) dz``.
    """
    g = branch_geometry(sign, t, p)
    A = g.complex_width
    q = g.mean_momentum_z / p.hbar - np.asarray(p_z, dtype=float) / p.hbar
    pref = (g.norm_const * g.global_phase * cmath.sqrt(4.0 * math.pi * A)
            / math.sqrt(2.0 * math.pi * p.hbar))
    out = pref * np.exp(-A * q * q + 1j * q * g.center_z)
    return complex(out) if np.ndim(out) == 0 else out


def momentum_sd(p: PhysParams) -> float:
    """Standard deviation of each branch's momentum density, ``hbar / 2 sigma0``."""
    return p.hbar / (2.0 * p.sigma0)


def momentum_pdf(sign: Sign, p_z, t: float, p: PhysParams = PhysParams()):
    return np.abs(momentum_amplitude(sign, p_z, t, p)) ** 2


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def collapse_constants(t: float, p: PhysParams = PhysParams(),
                       variant: TransverseVariant = "real_denominator") -> dict[str, float]:
    """Magnitudes of the normalization constants of the post-measurement states.

    Keys ``C1`` .. ``C8`` follow the order position (+, -), spin-z (+, -),
    spin-x (+, -), momentum (+, -). Position and momentum eigenstates are
    delta-normalized in z, so only the transverse factor is normalized there.
    """
    g_up, _ = branch_kinematics(t, p)
    m_norm = transverse_norm(t, p, variant)
    raw = 1.0 / g_up.norm_const
    ov = branch_overlap(t, p).real
    out = {"C1": 1.0 / m_norm, "C2": 1.0 / m_norm,
           "C3": 1.0 / (m_norm * raw), "C4": 1.0 / (m_norm * raw)}
    for key, s in (("C5", 1.0), ("C6", -1.0)):
        nsq = 2.0 * raw * raw * (1.0 + s * ov)
        out[key] = 1.0 / (m_norm * math.sqrt(nsq)) if nsq > 0 else math.inf
    out["C7"] = out["C8"] = 1.0 / m_norm
    return out


def normalization_report(t: float, p: PhysParams = PhysParams(),
                         variant: TransverseVariant = "real_denominator") -> dict[str, float]:
    """Compare the closed-form ``|C0|`` with the value that normalizes the state."""
    g_up, _ = branch_kinematics(t, p)
    computed = g_up.norm_const / (math.sqrt(2.0) * transverse_norm(t, p, variant))
    literal = abs(literal_c0(t, p))
    return {"t": t, "c0_literal": literal, "c0_computed": computed,
            "relative_difference": abs(literal - computed) / computed}


def _d2_fourth_order(f: np.ndarray, h: float) -> np.ndarray:
    return (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)


def schrodinger_residual(t: float, grid: tuple[float, float, int],
                         p: PhysParams = PhysParams()) -> float:
    """Relative residual ``||i hbar d_t psi - H psi|| / ||H psi||`` of the z-spinor.

    ``H = p_z^2/2m + mu_c (B0 + b z) sigma_z``. Derivatives are fourth-order
    central differences; the grid is ``(z_min, z_max, n_points)``.
    """
    if not t > 0:
        raise DomainError("residual needs t > 0")
    z_min, z_max, n = grid
    n = int(n)
    if n < 64:
        raise DomainError(f"grid too coarse: {n} points (need >= 64)")
    if not z_min < z_max:
        raise DomainError("empty grid")
    z = np.linspace(z_min, z_max, n)
    h = z[1] - z[0]
    dt = min(1e-3, t / 4.0)

    def spin(tt):
        s = evaluate_z_spinor(z, tt, p)
        return np.stack([s.up, s.down])

    psi = spin(t)
    dpsi_dt = (-spin(t + 2 * dt) + 8 * spin(t + dt) - 8 * spin(t - dt) + spin(t - 2 * dt)) / (12 * dt)
    inner = slice(2, -2)
    kinetic = -p.hbar ** 2 / (2 * p.m) * np.stack([_d2_fourth_order(psi[0], h),
                                                  _d2_fourth_order(psi[1], h)])
    field = p.mu_c * (p.B0 + p.b * z[inner])
    potential = np.stack([field * psi[0, inner], -field * psi[1, inner]])
    h_psi = kinetic + potential
    lhs = 1j * p.hbar * dpsi_dt[:, inner]
    denom = np.linalg.norm(h_psi)
    if denom == 0:
        raise DomainError("H psi vanishes on the grid")
    return float(np.linalg.norm(lhs - h_psi) / denom)


def default_grid(t: float, p: PhysParams = PhysParams(), n: int = 512,
                 n_widths: float = 12.0) -> tuple[float, float, int]:
    """z-grid spanning both branches out to ``n_widths`` standard deviations."""
    g_up, g_down = branch_kinematics(t, p)
    sd = g_up.position_sd
    lo = min(g_up.center_z, g_down.center_z) - n_widths * sd
    hi = max(g_up.center_z, g_down.center_z) + n_widths * sd
    return lo, hi, n
