import math
from dataclasses import replace

import numpy as np
import pytest

from sgsteer.numerics import DomainError, QuadratureSpec, integrate_complex
from sgsteer.validation import grid_norm
from sgsteer.wavefunction import (
    PhysParams,
    branch_kinematics,
    branch_overlap,
    branch_phi,
    collapse_constants,
    default_grid,
    evaluate_state,
    momentum_amplitude,
    momentum_pdf,
    normalization_report,
    position_pdf_z,
    schrodinger_residual,
    transverse_factor,
)

P = PhysParams()
WIDE = QuadratureSpec(-60, 60)


def quad(f, spec=WIDE):
    return integrate_complex(f, spec)


@pytest.mark.parametrize("kwargs", [dict(m=0), dict(sigma0=0), dict(hbar=-1), dict(b=math.nan)])
def test_params_rejected(kwargs):
    with pytest.raises(DomainError):
        PhysParams(**kwargs)


def test_negative_time_rejected():
    with pytest.raises(DomainError):
        branch_phi("+", 0.0, -1.0)


# --- branch_phi -----------------------------------------------------------------

def test_branch_peak_at_t0():
    v = branch_phi("+", 0.0, 0.0, P)
    assert v.real == pytest.approx((2 * math.pi) ** -0.25, rel=1e-14)
    assert v.imag == 0


def test_branch_falloff_at_t0():
    ratio = abs(branch_phi("+", 1.0, 0.0, P)) / abs(branch_phi("+", 0.0, 0.0, P))
    assert ratio == pytest.approx(math.exp(-0.25), rel=1e-14)


def test_branch_minus_peak_position():
    z = np.linspace(-10, 10, 20001)
    step = z[1] - z[0]
    peak = z[np.argmax(np.abs(branch_phi("-", z, 2.0, P)) ** 2)]
    assert abs(peak - 2.0) <= step


@pytest.mark.parametrize("t", [0.0, 0.7, 3.0])
@pytest.mark.parametrize("sign", ["+", "-"])
def test_branch_unit_norm(sign, t):
    val = quad(lambda z: np.abs(branch_phi(sign, z, t, P)) ** 2).real
    assert val == pytest.approx(1.0, abs=1e-10)


# --- evaluate_state -------------------------------------------------------------

def test_equal_weights_at_t0():
    s = evaluate_state(0.0, 0.0, 0.0, 0.0, P)
    assert abs(s.up) == pytest.approx(abs(s.down), rel=1e-15)


def test_state_norm_t0():
    assert grid_norm(0.0, P) == pytest.approx(1.0, abs=1e-8)


def test_spin_marginals_t15():
    t = 1.5
    for sign in "+-":
        # integrate |psi_spin|^2 over z at x = y = 0, then rescale by the transverse density
        m0 = abs(transverse_factor(0.0, 0.0, t, P)) ** 2
        f = (lambda z: np.abs(evaluate_state(0.0, 0.0, z, t, P).up) ** 2 / m0) if sign == "+" else \
            (lambda z: np.abs(evaluate_state(0.0, 0.0, z, t, P).down) ** 2 / m0)
        assert quad(f).real == pytest.approx(0.5, abs=1e-8)


def test_transverse_norm_by_quadrature():
    t = 1.2
    p = replace(P, k_y=0.8)
    for variant in ("real_denominator", "imaginary_denominator"):
        inner = lambda y: np.abs(transverse_factor(0.0, y, t, p, variant)) ** 2
        outer = lambda x: np.abs(transverse_factor(x, 0.0, t, p, variant)) ** 2
        m0 = abs(transverse_factor(0.0, 0.0, t, p, variant)) ** 2
        total = quad(inner).real * quad(outer).real / m0
        assert total == pytest.approx(1.0, abs=1e-9)


def test_transverse_variants_agree_without_kick():
    x, y = np.meshgrid(np.linspace(-4, 4, 9), np.linspace(-4, 4, 9))
    a = transverse_factor(x, y, 1.3, P, "real_denominator")
    b = transverse_factor(x, y, 1.3, P, "imaginary_denominator")
    assert np.max(np.abs(a - b)) < 1e-15


def test_imaginary_denominator_is_displaced_free_packet():
    # at t = 0 the transverse factor is a Gaussian centred at 2 sigma0^2 k_y;
    # the imaginary-denominator form equals its free evolution up to a constant
    p = replace(P, k_y=0.6)
    t = 0.9
    A = p.sigma0 ** 2 + 1j * t * p.hbar / (2 * p.m)
    y0 = 2 * p.sigma0 ** 2 * p.k_y
    y = np.linspace(-5, 5, 41)
    ours = transverse_factor(0.0, y, t, p, "imaginary_denominator")
    free = np.exp(-(y - y0) ** 2 / (4 * A))
    ratio = ours / free
    assert np.max(np.abs(ratio - ratio[0])) < 1e-12 * abs(ratio[0])
    real = transverse_factor(0.0, y, t, p, "real_denominator") / free
    assert np.max(np.abs(real - real[0])) > 1e-3 * abs(real[0])


def test_literal_prefactor_is_consistent():
    for t in (0.0, 0.5, 2.0, 5.0):
        assert normalization_report(t, P)["relative_difference"] < 1e-12


def test_collapse_constants_normalize():
    t = 1.0
    c = collapse_constants(t, P)
    assert c["C3"] == pytest.approx(c["C4"])
    assert c["C5"] < c["C6"]  # the antisymmetric combination is smaller, so needs more boost
    assert math.isinf(collapse_constants(0.0, P)["C6"])


# --- kinematics -----------------------------------------------------------------

def test_kinematics_initial():
    up, down = branch_kinematics(0.0, P)
    assert (up.center_z, down.center_z) == (0.0, 0.0)
    assert (up.mean_momentum_z, down.mean_momentum_z) == (0.0, 0.0)


def test_kinematics_t2():
    up, down = branch_kinematics(2.0, P)
    assert (up.center_z, down.center_z) == (-2.0, 2.0)
    assert (up.mean_momentum_z, down.mean_momentum_z) == (-2.0, 2.0)
    assert up.complex_width == complex(1.0, 1.0)


@pytest.mark.parametrize("t", [0.3, 1.0, 2.5])
def test_centre_speed_by_finite_difference(t):
    p = PhysParams(mu_c=1.3, b=0.7, m=1.9)
    h = 1e-5
    speed = (branch_kinematics(t + h, p)[1].center_z - branch_kinematics(t - h, p)[1].center_z) / (2 * h)
    assert speed == pytest.approx(t * p.mu_c * p.b / p.m, abs=1e-6)


# --- overlap --------------------------------------------------------------------

def test_overlap_limits():
    assert branch_overlap(0.0, P) == 1
    assert abs(branch_overlap(20.0, P)) < 1e-12


@pytest.mark.parametrize("p", [P, PhysParams(B0=0.8, mu_c=0.6, sigma0=1.4)])
def test_overlap_vs_quadrature(p):
    num = quad(lambda z: np.conj(branch_phi("+", z, 1.0, p)) * branch_phi("-", z, 1.0, p))
    assert abs(branch_overlap(1.0, p) - num) < 1e-10


def test_overlap_monotone():
    ts = np.linspace(0, 6, 61)
    mags = [abs(branch_overlap(t, P)) for t in ts]
    assert all(a >= b for a, b in zip(mags, mags[1:]))


# --- momentum -------------------------------------------------------------------

def test_momentum_matches_numerical_fourier_transform():
    t, p = 1.3, PhysParams(B0=0.4)
    for sign in "+-":
        for pz in (-2.0, -0.5, 0.0, 1.1):
            num = quad(lambda z: np.exp(-1j * pz * z / p.hbar) * branch_phi(sign, z, t, p)) \
                / math.sqrt(2 * math.pi * p.hbar)
            assert abs(momentum_amplitude(sign, pz, t, p) - num) < 1e-10


def test_momentum_initial_variance():
    mean = quad(lambda q: q * momentum_pdf("+", q, 0.0, P)).real
    var = quad(lambda q: (q - mean) ** 2 * momentum_pdf("+", q, 0.0, P)).real
    assert abs(mean) < 1e-12
    assert var == pytest.approx(P.hbar ** 2 / (4 * P.sigma0 ** 2), abs=1e-10)


def test_momentum_mean_t2():
    mean = quad(lambda q: q * momentum_pdf("-", q, 2.0, P)).real
    assert mean == pytest.approx(2.0, abs=1e-9)


@pytest.mark.parametrize("t", [0.0, 1.0, 4.0])
def test_parseval(t):
    for sign in "+-":
        pos = quad(lambda z: np.abs(branch_phi(sign, z, t, P)) ** 2).real
        mom = quad(lambda q: momentum_pdf(sign, q, t, P)).real
        assert mom == pytest.approx(1.0, abs=1e-8)
        assert abs(pos - mom) < 1e-8


# --- position density -----------------------------------------------------------

def test_pdf_single_hump_at_t0():
    z = np.linspace(-6, 6, 121)
    total, up, down = position_pdf_z(z, 0.0, P)
    assert np.array_equal(up, down)
    assert z[np.argmax(total)] == 0.0


def test_pdf_two_spots_at_large_t():
    t = 6.0
    z = np.linspace(-40, 40, 8001)
    total, _, _ = position_pdf_z(z, t, P)
    left, right = z < 0, z > 0
    assert z[left][np.argmax(total[left])] == pytest.approx(-18.0, abs=z[1] - z[0])
    assert z[right][np.argmax(total[right])] == pytest.approx(18.0, abs=z[1] - z[0])
    # spots are ~5.7 sd from the origin, so the gap sits ~1e-7 below the peaks
    assert total[np.argmin(np.abs(z))] < 1e-6 * total.max()


@pytest.mark.parametrize("t", [0.0, 1.0, 2.0])
def test_pdf_integrates_to_one(t):
    total = quad(lambda z: position_pdf_z(z, t, P)[0]).real
    assert total == pytest.approx(1.0, abs=1e-8)
    for part in (1, 2):
        assert quad(lambda z: position_pdf_z(z, t, P)[part]).real == pytest.approx(0.5, abs=1e-8)


def test_branch_exchange_symmetry():
    flipped = replace(P, mu_c=-P.mu_c)
    z = np.linspace(-15, 15, 601)
    for t in (0.4, 1.7, 3.0):
        assert np.max(np.abs(position_pdf_z(z, t, flipped)[0] - position_pdf_z(-z, t, P)[0])) < 1e-12


def test_silver_preset_is_well_formed():
    p = PhysParams.silver_like()
    up, down = branch_kinematics(1e-3, p)
    assert up.center_z < 0 < down.center_z
    assert abs(branch_overlap(1e-3, p)) <= 1.0


# --- Schrödinger residual -------------------------------------------------------

FREE = replace(P, b=0.0, B0=0.0)


def test_residual_free_packet():
    assert schrodinger_residual(1.0, default_grid(1.0, FREE, 256), FREE) < 1e-4


def test_residual_converges_under_refinement():
    res = [schrodinger_residual(1.0, default_grid(1.0, FREE, n), FREE) for n in (96, 192, 384)]
    assert res[0] > res[1] > res[2]
    # fourth-order stencil: halving h cuts the error roughly 16x
    assert res[0] / res[1] > 8


def test_residual_defaults_baseline():
    r = schrodinger_residual(1.0, default_grid(1.0, P, 512), P)
    assert r == pytest.approx(1.1623541110568714e-06, rel=1e-6)


def test_residual_guards():
    with pytest.raises(DomainError):
        schrodinger_residual(1.0, (-10, 10, 63), P)
    with pytest.raises(DomainError):
        schrodinger_residual(0.0, (-10, 10, 128), P)
