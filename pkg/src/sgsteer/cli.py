"""Command-line interface.

    sgsteer [--seed N] [--params FILE] [--out PATH] [--format csv|json] COMMAND ...

Commands: ``pdf``, ``measure``, ``boxes``, ``protocol``, ``validate``.
Exit status: 0 success, 1 statistical or invariant failure, 2 usage/config error.
If ``--out`` is omitted and ``SGSTEER_OUT_DIR`` is set, files go to that
directory under a default name; otherwise output goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import boxes
from .measurement import Setting, outcome_probabilities, sample_outcomes
from .numerics import DomainError, RngStream
from .protocol import (
    Model,
    RunConfig,
    Schedule,
    conformance,
    run_experiment,
    serialize_records,
)
from .validation import report, run_validation
from .wavefunction import PhysParams, default_grid, position_pdf_z

OUT_DIR_ENV = "SGSTEER_OUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    pass


def load_params(path: str | None) -> PhysParams:
    """Read ``key=value`` lines whose keys are PhysParams field names."""
    if path is None:
        return PhysParams()
    known = {f.name for f in fields(PhysParams)}
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read params file: {exc}") from exc
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = (s.strip() for s in line.partition("="))
        if not sep:
            raise ConfigError(f"{path}:{n}: expected key=value")
        if key not in known:
            raise ConfigError(f"{path}:{n}: unknown parameter {key!r}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise ConfigError(f"{path}:{n}: {key} is not a number: {raw!r}") from None
    try:
        return PhysParams(**values)
    except DomainError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _emit(data: bytes, out: str | None, default_name: str) -> str | None:
    if out is None and os.environ.get(OUT_DIR_ENV):
        out = str(Path(os.environ[OUT_DIR_ENV]) / default_name)
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
        return None
    path = Path(out)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return str(path)


def _json(obj) -> bytes:
    return (json.dumps(obj, indent=2, allow_nan=False) + "\n").encode("utf-8")


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {v}")
    return v


def _non_negative(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {v}")
    return v


def _setting(text: str) -> Setting:
    try:
        return Setting.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_pdf(args, p: PhysParams) -> int:
    if args.points < 2:
        args.parser.error("--points must be at least 2")
    lo, hi, _ = default_grid(args.time, p)
    z_min = lo if args.z_min is None else args.z_min
    z_max = hi if args.z_max is None else args.z_max
    if not z_min < z_max:
        args.parser.error("--z-min must be below --z-max")
    z = np.linspace(z_min, z_max, args.points)
    total, up, down = position_pdf_z(z, args.time, p)
    if args.format == "json":
        data = _json({"t": args.time, "z": z.tolist(), "pdf_total": total.tolist(),
                      "pdf_up": up.tolist(), "pdf_down": down.tolist()})
    else:
        rows = ["z,pdf_total,pdf_up,pdf_down"]
        rows += [",".join(map(_fmt, r)) for r in zip(z, total, up, down)]
        data = ("\n".join(rows) + "\n").encode("utf-8")
    _emit(data, args.out, f"pdf_t{args.time:g}.{args.format}")
    return EXIT_OK


def cmd_measure(args, p: PhysParams) -> int:
    rng = RngStream(args.seed, 0)
    labels, values = sample_outcomes(args.setting, args.time, p, rng, args.n)
    analytic = dict(outcome_probabilities(args.setting, args.time, p))
    rep = {"setting": args.setting.value, "t": args.time, "n": args.n, "seed": args.seed,
           "outcomes": {}}
    mismatch = False
    for label, prob in analytic.items():
        freq = float(np.mean(labels == label))
        se = float(np.sqrt(prob * (1 - prob) / args.n))
        z = 0.0 if se == 0 and freq == prob else (float("inf") if se == 0 else (freq - prob) / se)
        flagged = abs(z) > 5
        mismatch |= flagged
        rep["outcomes"][label] = {
            "analytic": prob, "empirical": freq, "standard_error": se,
            "z_score": z if np.isfinite(z) else None, "mismatch": flagged,
        }
        sel = values[labels == label]
        rep["outcomes"][label]["mean_value"] = float(np.mean(sel)) if sel.size else None
    rep["mismatch"] = mismatch
    _emit(_json(rep), args.out, "measure.json")
    return EXIT_FAIL if mismatch else EXIT_OK


def _matrix(rho) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(rho)]


def cmd_boxes(args, p: PhysParams) -> int:
    psi2 = boxes.make_psi2()
    asm = {s: boxes.assemblage(psi2, s) for s in boxes.BOX_SETTINGS}
    rep = {"state": _matrix([psi2.amplitudes])[0], "assemblages": {}, "trace_distance": {}}
    for s, a in asm.items():
        rep["assemblages"][s.value] = [
            {"outcome": m.outcome, "probability": m.probability, "rho": _matrix(m.rho)}
            for m in a.members
        ]
    rep["nonsignaling_deviation"] = boxes.nonsignaling_check(psi2)
    rep["nonsignaling_deviation_spin_marginal"] = boxes.nonsignaling_check(psi2, keep="spin")
    rep["full_mixture_deviation"] = boxes.nonsignaling_check(psi2, keep="full")
    settings = list(asm)
    for i, s1 in enumerate(settings):
        for s2 in settings[i + 1:]:
            key = f"{s1.value}-{s2.value}"
            rep["trace_distance"][key] = {
                "matrix": boxes.trace_distance_matrix(asm[s1], asm[s2]).tolist(),
                "max_min": boxes.steering_distinguishability(asm[s1], asm[s2]),
            }
    _emit(_json(rep), args.out, "boxes.json")
    return EXIT_OK


def cmd_protocol(args, p: PhysParams) -> int:
    try:
        cfg = RunConfig(args.n, Schedule(args.schedule, tuple(args.setting)), args.time, p,
                        args.seed, Model(args.model))
    except DomainError as exc:
        args.parser.error(str(exc))
    records, tally = run_experiment(cfg)
    fmt = args.format
    path = _emit(serialize_records(records, fmt), args.out,
                 f"records.{'csv' if fmt == 'csv' else 'jsonl'}")
    checks = conformance(cfg, tally)
    ok = all(c.passed for c in checks)
    rep = {"config": {"n_atoms": cfg.n_atoms, "schedule": args.schedule,
                      "settings": [s.value for s in cfg.schedule.settings],
                      "evolution_time": cfg.evolution_time, "seed": cfg.seed,
                      "model": cfg.model.value},
           "records_path": path, "tally": tally.as_dict(),
           "conformance": [{"setting": c.setting, "outcome": c.outcome, "expected": c.expected,
                            "observed": c.observed, "z_score": c.z_score if np.isfinite(c.z_score) else None,
                            "passed": c.passed} for c in checks],
           "passed": ok}
    stream = sys.stderr if path is None else sys.stdout
    stream.write(_json(rep).decode("utf-8"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_validate(args, p: PhysParams) -> int:
    checks = run_validation(p, seed=args.seed, n_samples=args.n)
    rep = report(checks)
    _emit(_json(rep), args.out, "validate.json")
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgsteer",
        description="Single-particle steering with the Stern-Gerlach entangled state.")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--params", metavar="FILE", help="key=value file overriding physical parameters")
    parser.add_argument("--out", metavar="PATH", help="output file (default: stdout or $%s)" % OUT_DIR_ENV)
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pdf", help="z-density grid of both spin branches")
    sp.add_argument("--time", "-t", type=_non_negative, default=0.0)
    sp.add_argument("--points", type=int, default=401)
    sp.add_argument("--z-min", type=float)
    sp.add_argument("--z-max", type=float)
    sp.set_defaults(func=cmd_pdf, parser=sp)

    sp = sub.add_parser("measure", help="Monte Carlo outcome frequencies for one setting")
    sp.add_argument("--setting", "-s", type=_setting, required=True)
    sp.add_argument("--time", "-t", type=_non_negative, default=1.0)
    sp.add_argument("-n", type=_positive_int, default=10000)
    sp.set_defaults(func=cmd_measure, parser=sp)

    sp = sub.add_parser("boxes", help="assemblages, non-signaling and trace distances of the box model")
    sp.set_defaults(func=cmd_boxes, parser=sp)

    sp = sub.add_parser("protocol", help="run the N-atom steering protocol")
    sp.add_argument("-n", type=_positive_int, default=1000)
    sp.add_argument("--setting", "-s", type=_setting, action="append",
                    help="setting(s); repeat for alternating/random schedules")
    sp.add_argument("--schedule", choices=("fixed", "alternating", "random"), default="fixed")
    sp.add_argument("--time", "-t", type=_non_negative, default=5.0)
    sp.add_argument("--model", choices=[m.value for m in Model], default=Model.CONTINUOUS.value)
    sp.set_defaults(func=cmd_protocol, parser=sp)

    sp = sub.add_parser("validate", help="run the invariant battery")
    sp.add_argument("-n", type=_positive_int, default=20000, help="atoms per statistical check")
    sp.set_defaults(func=cmd_validate, parser=sp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "protocol" and not args.setting:
        args.setting = [Setting.SPIN_Z]
    try:
        p = load_params(args.params)
    except ConfigError as exc:
        print(f"sgsteer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, p)
    except (DomainError, ConfigError) as exc:
        print(f"sgsteer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
