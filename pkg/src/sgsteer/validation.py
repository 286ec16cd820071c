"""Invariant battery behind ``sgsteer validate``.

Each check returns a :class:`Check`; ``hard=False`` marks diagnostics that
are reported but never fail the run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np

from . import boxes
from .measurement import (
    Setting,
    collapsed_state,
    outcome_probabilities,
    remote_collapse,
    steered_pdf,
)
from .numerics import QuadratureSpec, integrate_complex
from .protocol import Model, RunConfig, Schedule, conformance, run_experiment, serialize_records
from .wavefunction import (
    PhysParams,
    branch_kinematics,
    branch_overlap,
    branch_phi,
    default_grid,
    evaluate_state,
    momentum_pdf,
    momentum_sd,
    normalization_report,
    position_pdf_z,
    schrodinger_residual,
)

NORM_TIMES = (0.0, 0.5, 1.0, 2.0, 5.0)
OVERLAP_TIMES = (0.0, 0.25, 0.5, 1.0, 2.0)


@dataclass
class Check:
    name: str
    passed: bool
    value: float | str
    tolerance: float | str
    hard: bool = True

    def __post_init__(self):
        # numpy scalars would leak into the JSON report
        self.passed = bool(self.passed)
        if not isinstance(self.value, str):
            self.value = float(self.value)


def grid_norm(t: float, p: PhysParams, points_per_sd: float = 4.0) -> float:
    """Trapezoid-rule integral of the 3-D spinor density on a tensor grid.

    Gaussian integrands converge spectrally under the trapezoid rule, so a
    spacing of a quarter standard deviation is far below 1e-10 error.
    """
    g_up, g_down = branch_kinematics(t, p)
    sd = g_up.position_sd
    h = sd / points_per_sd
    xy = np.arange(-12 * sd, 12 * sd + h / 2, h)
    lo, hi, _ = default_grid(t, p)
    z = np.arange(lo, hi + h / 2, h)
    X, Y, Z = np.meshgrid(xy, xy, z, indexing="ij", sparse=True)
    dens = evaluate_state(X, Y, Z, t, p).density
    return float(np.sum(dens) * h ** 3)


def spin_marginal(sign: str, t: float, p: PhysParams) -> float:
    g = branch_kinematics(t, p)[0 if sign == "+" else 1]
    spec = QuadratureSpec.around(g.center_z, g.position_sd)
    part = 1 if sign == "+" else 2
    return integrate_complex(lambda z: position_pdf_z(z, t, p)[part], spec).real


def quadrature_overlap(t: float, p: PhysParams) -> complex:
    spec = QuadratureSpec.covering(
        [(g.center_z - 12 * g.position_sd, g.center_z + 12 * g.position_sd)
         for g in branch_kinematics(t, p)])
    return integrate_complex(
        lambda z: np.conj(branch_phi("+", z, t, p)) * branch_phi("-", z, t, p), spec)


def momentum_moment(sign: str, t: float, p: PhysParams) -> float:
    g = branch_kinematics(t, p)[0 if sign == "+" else 1]
    spec = QuadratureSpec.around(g.mean_momentum_z, momentum_sd(p))
    return integrate_complex(lambda q: q * momentum_pdf(sign, q, t, p), spec).real


def _norm_checks(p):
    for t in NORM_TIMES:
        v = grid_norm(t, p)
        yield Check(f"unit_norm[t={t}]", abs(v - 1) < 1e-8, v, 1e-8)
        for sign in "+-":
            w = spin_marginal(sign, t, p)
            yield Check(f"spin_weight_{sign}[t={t}]", abs(w - 0.5) < 1e-8, w, 1e-8)


def _kinematics_checks(p):
    for t in (1.0, 2.0, 3.0):
        lo, hi, _ = default_grid(t, p)
        z = np.linspace(lo, hi, 4001)
        step = z[1] - z[0]
        _, up, down = position_pdf_z(z, t, p)
        g_up, g_down = branch_kinematics(t, p)
        for name, dens, g in (("up", up, g_up), ("down", down, g_down)):
            err = abs(z[np.argmax(dens)] - g.center_z)
            yield Check(f"branch_peak_{name}[t={t}]", err <= step, err, step)
        for sign, g in (("+", g_up), ("-", g_down)):
            err = abs(momentum_moment(sign, t, p) - g.mean_momentum_z)
            yield Check(f"momentum_mean_{sign}[t={t}]", err < 1e-6, err, 1e-6)


def _overlap_checks(p):
    prev = math.inf
    for t in OVERLAP_TIMES:
        a = branch_overlap(t, p)
        err = abs(a - quadrature_overlap(t, p))
        yield Check(f"overlap_vs_quadrature[t={t}]", err < 1e-10, err, 1e-10)
        r = a.real
        yield Check(f"overlap_monotone[t={t}]", r <= prev + 1e-15, r, "non-increasing")
        prev = r


def _symmetry_checks(p):
    flipped = replace(p, mu_c=-p.mu_c)
    z = np.linspace(-20, 20, 801)
    for t in (0.5, 2.0):
        err = float(np.max(np.abs(position_pdf_z(z, t, flipped)[0] - position_pdf_z(-z, t, p)[0])))
        yield Check(f"branch_exchange_symmetry[t={t}]", err < 1e-12, err, 1e-12)


def _measurement_checks(p):
    for t in (0.0, 0.5, 1.0, 2.0):
        for s in Setting:
            total = sum(q for _, q in outcome_probabilities(s, t, p))
            yield Check(f"probabilities_sum[{s.value},t={t}]", abs(total - 1) < 1e-12, total, 1e-12)
    z = np.linspace(-25, 25, 1001)
    for t in (0.5, 1.0, 2.0):
        total = position_pdf_z(z, t, p)[0]
        for s in (Setting.SPIN_Z, Setting.SPIN_X):
            mix = sum(q * steered_pdf(collapsed_state(s, i, 0.0, t, p), z)
                      for i, (_, q) in enumerate(outcome_probabilities(s, t, p)))
            err = float(np.max(np.abs(mix - total)))
            yield Check(f"ensemble_nonsignaling[{s.value},t={t}]", err < 1e-9, err, 1e-9)


def _boxes_checks():
    psi2 = boxes.make_psi2()
    dev = boxes.nonsignaling_check(psi2)
    yield Check("boxes_nonsignaling", dev < 1e-12, dev, 1e-12)
    full = boxes.nonsignaling_check(psi2, keep="full")
    yield Check("boxes_full_mixture_deviation", True, full, "informational", hard=False)
    a_pos = boxes.assemblage(psi2, Setting.POSITION_Z)
    a_sx = boxes.assemblage(psi2, Setting.SPIN_X)
    d = boxes.steering_distinguishability(a_pos, a_sx)
    yield Check("steering_distinguishability", d >= 0.86, d, ">= 0.86")


def _protocol_checks(p, seed, n):
    t = 5.0
    for s in Setting:
        cfg = RunConfig(n, Schedule("fixed", (s,)), t, p, seed)
        records, tally = run_experiment(cfg)
        worst = max(abs(c.z_score) for c in conformance(cfg, tally))
        yield Check(f"protocol_conformance[{s.value}]", worst <= 5, worst, "5 sigma")
        if s is not Setting.SPIN_X:
            want = remote_collapse(s, True, t, p).label
            bad = sum(1 for r in records if not r.alice_detected and r.bob_label != want)
            yield Check(f"null_detection_collapse[{s.value}]", bad == 0, bad, 0)
    cfg = RunConfig(min(n, 2000), Schedule("random", tuple(Setting)), 1.0, p, seed)
    same = serialize_records(run_experiment(cfg)[0]) == serialize_records(run_experiment(cfg)[0])
    yield Check("determinism", same, str(same), "byte-identical")
    cfg_b = RunConfig(n, Schedule("fixed", (Setting.SPIN_Z,)), t, p, seed + 1, Model.BOXES)
    worst = max(abs(c.z_score) for c in conformance(cfg_b, run_experiment(cfg_b)[1]))
    yield Check("boxes_protocol_conformance[SpinZ]", worst <= 5, worst, "5 sigma")


def _diagnostics(p):
    free = replace(p, b=0.0, B0=0.0)
    coarse = schrodinger_residual(1.0, default_grid(1.0, free, 128), free)
    fine = schrodinger_residual(1.0, default_grid(1.0, free, 256), free)
    yield Check("residual_free_packet", fine < 1e-4 and fine < coarse, fine, 1e-4)
    r = schrodinger_residual(1.0, default_grid(1.0, p, 512), p)
    yield Check("residual_defaults[t=1]", True, r, "informational", hard=False)
    rep = normalization_report(1.0, p)
    yield Check("c0_literal_vs_computed[t=1]", True, rep["relative_difference"],
                "informational", hard=False)


def run_validation(p: PhysParams = PhysParams(), seed: int = 0, n_samples: int = 20000) -> list[Check]:
    groups: list[Callable[[], object]] = [
        lambda: _norm_checks(p),
        lambda: _kinematics_checks(p),
        lambda: _overlap_checks(p),
        lambda: _symmetry_checks(p),
        lambda: _measurement_checks(p),
        _boxes_checks,
        lambda: _protocol_checks(p, seed, n_samples),
        lambda: _diagnostics(p),
    ]
    return [c for g in groups for c in g()]


def report(checks: list[Check]) -> dict:
    hard_ok = all(c.passed for c in checks if c.hard)
    return {"passed": hard_ok, "checks": [asdict(c) for c in checks]}
