"""Command-line front end.

Every command writes one JSON document or one CSV table, to standard output
or to ``--output``. Relative output paths are resolved against
``$GPCPIN_OUTPUT_DIR`` when it is set. Floats carry 12 significant digits.
A ``--config`` file of ``key=value`` lines overrides the matching flags.

Exit codes: 0 success, 2 bad arguments, 3 unsupported setting, 4 numeric
failure (including I/O errors).
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import harmonium, hubbard, qmp_compat
from .errors import ArgumentError, GpcError, UnsupportedSettingError
from .fock_core import Setting, Spectrum
from .pauli_constraints import catalog, equality_residuals, is_member, measure, spectrum_values
from .pinning_analysis import analyze

OUTPUT_DIR_ENV = "GPCPIN_OUTPUT_DIR"
DIGITS = 12


def _num(x: float):
    if x is None or not math.isfinite(x):
        return None
    return float(f"{x:.{DIGITS}g}")


def clean(obj):
    """Round floats to 12 significant digits and make the object JSON-safe."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, complex):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, Spectrum):
        return clean(obj.values)
    if isinstance(obj, Setting):
        return [obj.particles, obj.orbitals]
    return obj


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "" if not math.isfinite(x) else f"{x:.{DIGITS}g}"
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


# ------------------------------------------------------------------ parsing

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise ArgumentError(f"cannot read numbers from {text!r}") from exc


def _setting(text: str) -> Setting:
    parts = text.split(",")
    if len(parts) != 2:
        raise ArgumentError(f"setting must look like N,d, got {text!r}")
    try:
        return Setting(int(parts[0]), int(parts[1]))
    except ValueError as exc:
        raise ArgumentError(f"setting must look like N,d, got {text!r}") from exc


def _lambda(text: str) -> list[float]:
    """Inline comma list or a file of numbers (commas or whitespace)."""
    p = Path(text)
    if p.is_file():
        try:
            body = p.read_text()
        except OSError as exc:
            raise ArgumentError(f"cannot read {text}: {exc}") from exc
        return _floats(",".join(body.split()))
    return _floats(text)


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ArgumentError(f"not a complex number: {text!r}") from exc


def _grid(a: float, b: float, steps: int) -> list[float]:
    if steps < 0:
        raise ArgumentError("steps must be non-negative")
    if steps == 0:
        return []
    if steps == 1:
        return [a]
    return [float(x) for x in np.linspace(a, b, steps)]


# ------------------------------------------------------------------ commands

def cmd_gpc_list(args):
    cat = catalog(_setting(args.setting))
    d = cat.setting.orbitals
    rows = [[c.label, c.kind, c.kappa0, *c.kappas] for c in cat.constraints]
    if args.format == "json":
        return {"setting": cat.setting, "provenance": cat.provenance,
                "constraints": [{"label": c.label, "kind": c.kind, "kappa0": c.kappa0, "kappas": list(c.kappas)}
                                for c in cat.constraints]}
    return csv_text(["label", "kind", "kappa0"] + [f"kappa_{i}" for i in range(1, d + 1)], rows)


def cmd_gpc_eval(args):
    setting = _setting(args.setting)
    vals = spectrum_values(_lambda(args.lam), setting)
    cat = catalog(setting)
    rows = [(c.label, measure(c, vals, args.measure)) for c in cat.inequalities]
    if args.format == "csv":
        return csv_text(["label", "value"], rows)
    best = min(rows, key=lambda r: r[1]) if rows else (None, None)
    return {"setting": setting, "measure": args.measure, "member": is_member(vals, setting),
            "constraints": [{"label": lab, "value": v} for lab, v in rows],
            "equalities": [{"label": lab, "residual": v} for lab, v in equality_residuals(vals, setting)],
            "min": {"label": best[0], "value": best[1]}}


def cmd_pin_analyze(args):
    report = analyze(_lambda(args.lam), epsilon_threshold=args.threshold, which=args.measure)
    if args.format == "csv":
        return csv_text(["label", "value"], report.constraints)
    return report.to_dict()


def cmd_harmonium_nons(args):
    p = harmonium.derive_params(args.N, delta=args.delta)
    spec = harmonium.fermionic_nons(p, args.mmax)
    vals = spec.values[: args.count]
    if args.format == "csv":
        return csv_text(["k", "lambda_k"], enumerate(vals, start=1))
    return {"N": args.N, "delta": args.delta, "m_max": args.mmax, "nons": list(vals),
            "params": harmonium._json_safe(p.to_dict())}


def cmd_harmonium_sweep(args):
    deltas = sorted(_floats(args.delta_grid))
    rows = []
    fits = {}
    for d in deltas:
        p = harmonium.derive_params(args.N, delta=d)
        spec = harmonium.fermionic_nons(p, args.mmax)
        rows.extend((d, k, v) for k, v in enumerate(spec.values[: args.count], start=1))
        if args.fit:
            fits[f"{d:.12g}"] = [f.to_dict() for f in harmonium.decay_diagnostics(p)]
    if args.format == "csv":
        if args.fit:
            raise ArgumentError("--fit needs --format json")
        return csv_text(["delta", "k", "lambda_k"], rows)
    out = {"N": args.N, "m_max": args.mmax,
           "nons": [{"delta": d, "k": k, "lambda_k": v} for d, k, v in rows]}
    if args.fit:
        out["fits"] = fits
    return out


def cmd_harmonium_series(args):
    res = harmonium.weak_coupling_series(args.N, args.order)
    table = res.as_table()
    if args.format == "csv":
        rows = [(r["quantity"], k, c) for r in table for k, c in sorted(r["coefficients"].items())]
        return csv_text(["quantity", "power", "coefficient"], rows)
    return {"N": args.N, "order": args.order, "series": table}


def cmd_hubbard_solve(args):
    setting = hubbard.LatticeSetting(args.sites, args.electrons)
    superposed = args.zeta is not None or args.xi is not None or args.phase
    if superposed:
        if (setting.sites, setting.electrons) != (3, 3):
            raise ArgumentError("superpositions are available for 3 sites and 3 electrons only")
        zeta = _complex(args.zeta) if args.zeta is not None else complex(1 / math.sqrt(2))
        xi = _complex(args.xi) if args.xi is not None else complex(1 / math.sqrt(2))
        xi *= cmath.exp(1j * args.phase)
        r = hubbard.superposed_state(args.u, zeta, xi)
        return {"u": args.u, "zeta": zeta, "xi": xi, "nons": r.spectrum, "up_block": list(r.up_values),
                "down_block": list(r.down_values), "D": r.distance, "case": r.case,
                "pairing_residual": r.pairing_residual}
    if (setting.sites, setting.electrons) == (3, 3) and args.K in (None, "1"):
        s = hubbard.solve_three_site(args.u)
        return {"u": args.u, "energies": list(s.energies), "alpha": s.alpha, "beta": s.beta, "gamma": s.gamma,
                "nons": s.spectrum, "occupations": list(s.occupations), "D": s.distance,
                "pinned": s.pinned}
    return _point(hubbard.ground_point(setting, args.u, _k(args.K), threshold_or_none(args)))


def threshold_or_none(args):
    return getattr(args, "threshold", None)


def _k(text):
    if text is None:
        return 1
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError as exc:
        raise ArgumentError(f"K must be an integer or 'auto', got {text!r}") from exc


def _point(p: hubbard.ScanPoint) -> dict:
    return {"u": p.u, "K": p.K, "two_M": p.two_m, "energy": p.energy, "nons": p.spectrum,
            "is_ground": p.is_ground, "degenerate": p.degenerate,
            "report": p.report.to_dict() if p.report else None, "note": p.note or None}


def cmd_hubbard_scan(args):
    setting = hubbard.LatticeSetting(args.sites, args.electrons)
    scan = hubbard.ground_scan(setting, _grid(args.u_from, args.u_to, args.steps), _k(args.K),
                               epsilon_threshold=args.threshold)
    if args.format == "csv":
        return scan.to_csv()
    return {"sites": setting.sites, "electrons": setting.electrons, "crossings": scan.crossings,
            "points": [_point(p) for p in scan.points]}


def cmd_hubbard_transition(args):
    setting = hubbard.LatticeSetting(args.sites, args.electrons)
    bracket = _floats(args.bracket) if args.bracket else None
    if bracket is not None and len(bracket) != 2:
        raise ArgumentError("bracket needs two numbers")
    u_p = hubbard.find_transition(setting, bracket)
    if args.format == "csv":
        return csv_text(["u_p"], [[u_p]])
    return {"u_p": u_p}


def cmd_qmp_check(args):
    if args.random:
        rng = np.random.default_rng(args.seed)
        failures = 0
        for _ in range(args.random):
            v = rng.normal(size=4) + 1j * rng.normal(size=4)
            v /= np.linalg.norm(v)
            t = qmp_compat.marginal_triple(np.outer(v, v.conj()), args.mode)
            failures += not qmp_compat.check(t).compatible
        return {"mode": args.mode, "seed": args.seed, "samples": args.random, "failures": failures}
    if args.a is None or args.ab is None:
        raise ArgumentError("give --a and --ab (and --b for mode a_b_ab), or --random")
    r = qmp_compat.check_spectra(_floats(args.a), _floats(args.b) if args.b else None, _floats(args.ab),
                                 args.mode)
    if args.format == "csv":
        return csv_text(["label", "slack"], r.values)
    return r.to_dict()


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="write here instead of standard output")
    common.add_argument("--format", choices=("json", "csv"))
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="key=value file overriding flags")

    parser = argparse.ArgumentParser(prog="gpcpin", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)

    def add(group, name, func, fmt="json", **kw):
        p = group.add_parser(name, parents=[common], **kw)
        p.set_defaults(func=func, default_format=fmt)
        return p

    gpc = groups.add_parser("gpc", help="constraint catalogs").add_subparsers(dest="command", required=True)
    p = add(gpc, "list", cmd_gpc_list, fmt="csv")
    p.add_argument("--setting", required=True)
    p = add(gpc, "eval", cmd_gpc_eval)
    p.add_argument("--setting", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--measure", default="dD", choices=("dD", "d1", "d2"))

    pin = groups.add_parser("pin", help="pinning analysis").add_subparsers(dest="command", required=True)
    p = add(pin, "analyze", cmd_pin_analyze)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--measure", default="dD", choices=("dD", "d1", "d2"))

    harm = groups.add_parser("harmonium", help="harmonic model").add_subparsers(dest="command", required=True)
    p = add(harm, "nons", cmd_harmonium_nons)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--mmax", type=int, default=harmonium.DEFAULT_M_MAX)
    p.add_argument("--count", type=int, default=10)
    p = add(harm, "sweep", cmd_harmonium_sweep, fmt="csv")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--delta-grid", required=True)
    p.add_argument("--mmax", type=int, default=harmonium.DEFAULT_M_MAX)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--fit", action="store_true")
    p = add(harm, "series", cmd_harmonium_series)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--order", type=int, default=harmonium.MAX_SERIES_ORDER)

    hub = groups.add_parser("hubbard", help="Hubbard chain").add_subparsers(dest="command", required=True)
    for name, func, fmt in (("solve", cmd_hubbard_solve, "json"), ("scan", cmd_hubbard_scan, "csv"),
                            ("transition", cmd_hubbard_transition, "json")):
        p = add(hub, name, func, fmt=fmt)
        p.add_argument("--sites", type=int, default=3)
        p.add_argument("--electrons", type=int, default=3)
        if name != "transition":
            p.add_argument("--K", help="wavenumber block or 'auto'")
            p.add_argument("--threshold", type=float)
    hub.choices["solve"].add_argument("--u", type=float, required=True)
    hub.choices["solve"].add_argument("--zeta")
    hub.choices["solve"].add_argument("--xi")
    hub.choices["solve"].add_argument("--phase", type=float, default=0.0)
    hub.choices["scan"].add_argument("--u-from", type=float, required=True)
    hub.choices["scan"].add_argument("--u-to", type=float, required=True)
    hub.choices["scan"].add_argument("--steps", type=int, default=21)
    hub.choices["transition"].add_argument("--bracket")

    qmp = groups.add_parser("qmp", help="two-qubit marginals").add_subparsers(dest="command", required=True)
    p = add(qmp, "check", cmd_qmp_check)
    p.add_argument("--mode", default="a_b_ab", choices=qmp_compat.MODES)
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--ab")
    p.add_argument("--random", type=int, default=0, help="check this many random pure states instead")
    return parser


def _config_args(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return []
    try:
        lines = Path(known.config).read_text().splitlines()
    except OSError as exc:
        raise ArgumentError(f"cannot read config {known.config}: {exc}") from exc
    extra = []
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ArgumentError(f"config line without '=': {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        flag = "--" + key.replace("_", "-") if key not in ("N", "K") else "--" + key
        if value.lower() in ("true", "yes") and key == "fit":
            extra.append(flag)
        else:
            extra += [flag, value]
    return extra


def _write(text: str, output: str | None):
    if output is None:
        sys.stdout.write(text)
        return
    path = Path(output)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv + _config_args(argv))
        args.format = args.format or args.default_format
        result = args.func(args)
        text = result if isinstance(result, str) else json.dumps(clean(result), indent=2) + "\n"
        _write(text, args.output)
    except SystemExit as exc:
        return int(exc.code or 0)
    except UnsupportedSettingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except GpcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


def main() -> None:
    sys.exit(run())
