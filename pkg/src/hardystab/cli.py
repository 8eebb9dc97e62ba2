"""Command-line interface: ``hardystab {exponents,sweep,solve,check}``.

Values come from three layers, highest first: command-line flags, the
``--config`` JSON file, then the defaults listed in ``--help``.

Exit codes: 0 pass, 1 verification failed, 2 bad parameters, 3 I/O error,
4 dynamical precondition failed (no saddle at the origin, no positive
equilibrium, trajectory left positivity).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import estimates, regions, stability
from .exponents import (
    ParameterError,
    Parameters,
    derive,
    gamma_max,
    mu_bar,
    mu_star,
    nu_roots,
    p_critical,
    p_plus_minus,
    p_star,
    sobolev_exponent,
    upper_exponent,
)
from .io import dumps_report, write_solution_csv, write_text, write_trajectory_csv
from .phase import (
    DynamicsError,
    equilibria,
    positive_node_discriminant,
    shoot_solution,
    singular_solution,
)
from .regions import fmt

EXIT_PASS, EXIT_FAIL, EXIT_PARAMS, EXIT_IO, EXIT_DYNAMICS = range(5)


class UsageError(Exception):
    """Bad flag value; maps to exit code 2."""


# name -> (default, type, help). A default of None means "required".
PARAMS = {
    "N": (None, int, "space dimension, an integer >= 3"),
    "l": (0.0, float, "weight exponent, l > -2"),
    "mu": (0.0, float, "Hardy coefficient, mu < (N-2)^2/4"),
    "p": (None, float, "nonlinearity exponent, p > 1"),
}
SHOOT = {
    "offset": (1e-8, float, "distance of the start point from the origin"),
    "t_max": (None, float, "last log-radius t = ln r integrated "
              "(default: 200 + 40/slowest linear rate)"),
    "rtol": (1e-10, float, "integrator relative tolerance"),
    "atol": (None, float, "integrator absolute tolerance (default: rtol * offset)"),
    "branch": (1, int, "+1 for the positive branch, -1 for its mirror"),
}
COMMON = {
    "format": (None, str, "output format, json or csv (default: csv for sweep, json otherwise)"),
    "seed": (0, int, "seed for the random test functions"),
}
CHECK = {
    "source": ("shoot", str, "solution to check: shoot or singular"),
    "gamma": (1.0, float, "exponent gamma in [1, gamma_M) for prop31 and annulus"),
    "radii": (None, str, "comma-separated radii (default: 1,2,4,...,64 for prop31, "
              "2,4,...,256 for annulus)"),
    "sigma": (0.5, float, "inner radius of the Pohozaev annulus"),
    "R": (2.0, float, "outer radius of the Pohozaev annulus"),
    "tol": (1e-8, float, "pass threshold for the Pohozaev residual"),
    "threshold": (1e-8, float, "stability: Q < -threshold * gradient term counts as negative"),
}


def _add(parser, table, names=None):
    for name in names or table:
        default, typ, text = table[name]
        flag = "--" + name.replace("_", "-")
        if default is None and name in ("N", "p"):
            text += " (required)"
        elif default is not None:
            text += f" (default: {default})"
        parser.add_argument(flag, dest=name, type=typ, default=None, help=text)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="hardystab",
        description="Stable solutions of Delta u + mu u/|x|^2 + |x|^l |u|^(p-1) u = 0.",
        epilog=__doc__.split("\n\n", 1)[1],
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None,
                       help="JSON file of flag values; explicit flags win (default: none)")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        _add(p, COMMON)

    p = sub.add_parser("exponents", help="critical exponents and curves at (N, l, mu)")
    _add(p, PARAMS, ["N", "l", "mu"])
    common(p)

    p = sub.add_parser("sweep", help="label a (mu, p) grid and sample the dividing curves")
    _add(p, PARAMS, ["N", "l"])
    p.add_argument("--mu-range", dest="mu_range", default=None,
                   help="lo:hi:count (required)")
    p.add_argument("--p-range", dest="p_range", default=None, help="lo:hi:count (required)")
    common(p)

    p = sub.add_parser("solve", help="shoot the radial solution and write it out")
    _add(p, PARAMS)
    _add(p, SHOOT)
    common(p)
    p.add_argument("--out-dir", dest="out_dir", default=None,
                   help="directory for trajectory.csv, solution.csv, summary.json "
                        "(default: .)")

    p = sub.add_parser("check", help="run one verification and report pass/fail")
    p.add_argument("target", choices=["stability", "prop31", "pohozaev", "annulus"])
    _add(p, PARAMS)
    _add(p, CHECK)
    _add(p, SHOOT)
    common(p)
    return ap


def _resolve(args, tables) -> dict:
    """Merge flags over config over defaults."""
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise OSError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
    out = {}
    for table in tables:
        for name, (default, typ, _) in table.items():
            if not hasattr(args, name):
                continue
            val = getattr(args, name)
            if val is None and name in cfg:
                try:
                    val = typ(cfg[name])
                except (TypeError, ValueError) as exc:
                    raise UsageError(f"config value for {name!r}: {exc}") from exc
            out[name] = default if val is None else val
    for key in ("mu_range", "p_range", "out", "out_dir"):
        if hasattr(args, key):
            val = getattr(args, key)
            out[key] = cfg.get(key) if val is None else val
    for name in ("N", "p"):
        if name in out and out[name] is None and hasattr(args, name):
            raise UsageError(f"--{name} is required")
    if out.get("format") not in (None, "json", "csv"):
        raise UsageError("--format must be json or csv")
    for key in ("rtol", "atol", "offset", "tol", "threshold"):
        if out.get(key) is not None and not out[key] > 0:
            raise UsageError(f"--{key} must be positive")
    return out


def _emit(text: str, out) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_text(out, text)


def _params(o) -> Parameters:
    return Parameters(o["N"], o["l"], o["mu"], o["p"])


def _flat_csv(doc: dict) -> str:
    lines = ["key,value"]
    for k, v in doc.items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v, separators=(",", ":"))
            v = '"' + v.replace('"', '""') + '"'
        elif isinstance(v, float) or v is None:
            v = fmt(v)
        lines.append(f"{k},{v}")
    return "\n".join(lines) + "\n"


def _render(doc: dict, o) -> str:
    return _flat_csv(doc) if o["format"] == "csv" else dumps_report(doc)


# -- commands -------------------------------------------------------------------

def cmd_exponents(o) -> int:
    o["format"] = o["format"] or "json"
    N, l, mu = o["N"], o["l"], o["mu"]
    Parameters(N, l, mu, 2.0)  # validates N, l, mu
    nu_m, nu_p = nu_roots(N, mu)
    pc = p_critical(N, l, mu)
    doc = {"N": N, "l": l, "mu": mu, "mu_bar": mu_bar(N),
           "sobolev_exponent": sobolev_exponent(N, l), "nu_minus": nu_m, "nu_plus": nu_p,
           "p_c": pc,
           "gamma_M_at_p_c": gamma_max(Parameters(N, l, mu, pc)) if math.isfinite(pc) else None}
    if mu > 0:
        doc["upper"] = upper_exponent(N, l, mu)
    if N > 10 + 4 * l:
        doc["mu_star"] = mu_star(N, l)
        doc["p_star"] = p_star(N, l)
        if mu_star(N, l) <= mu <= 0:
            doc["p_minus"], doc["p_plus"] = p_plus_minus(mu, N, l)
    _emit(_render(doc, o), o["out"])
    return EXIT_PASS


def _range(text, name):
    try:
        lo, hi, n = str(text).split(":")
        return float(lo), float(hi), int(n)
    except (ValueError, AttributeError):
        raise UsageError(f"--{name.replace('_', '-')} must look like lo:hi:count") from None


def cmd_sweep(o) -> int:
    if o["mu_range"] is None or o["p_range"] is None:
        raise UsageError("--mu-range and --p-range are required")
    if o["N"] is None:
        raise UsageError("--N is required")
    grid = regions.SweepGrid(o["N"], o["l"], _range(o["mu_range"], "mu_range"),
                             _range(o["p_range"], "p_range"))
    Parameters(grid.N, grid.l, grid.mu_values()[0], 2.0)
    res = regions.sweep(grid)
    out = o["out"]
    if o["format"] == "json":
        _emit(regions.sweep_json(res), out)
    else:
        _emit(regions.sweep_csv(res), out)
        if out not in (None, "-"):
            path = Path(out)
            write_text(path.with_name(path.stem + ".curves.csv"), regions.curves_csv(res))
    counts = res.counts()
    if out not in (None, "-"):
        print(f"{len(res.cells)} cells: " + ", ".join(f"{k} {v}" for k, v in sorted(counts.items())))
    return EXIT_PASS


def _shoot(prm, o):
    from .ode import IntegratorConfig
    atol = o["atol"] if o["atol"] is not None else o["rtol"] * o["offset"]
    cfg = IntegratorConfig(rtol=o["rtol"], atol=atol)
    return shoot_solution(prm, offset=o["offset"], t_max=o["t_max"], integrator_cfg=cfg,
                          branch=o["branch"])


def _weak_residual(sol, prm, seed):
    return stability.verify_weak_solution(sol, prm, stability.random_bumps(8, seed=seed))


def cmd_solve(o) -> int:
    prm = _params(o)
    c = derive(prm)
    traj, sol = _shoot(prm, o)
    out_dir = Path(o["out_dir"] or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    write_trajectory_csv(traj, out_dir / "trajectory.csv")
    write_solution_csv(sol, out_dir / "solution.csv")
    summary = {
        "params": prm.as_dict(),
        "equilibria": [e.as_dict() for e in equilibria(c)],
        "discriminant_at_w0": positive_node_discriminant(c) if c.has_w0 else None,
        "status": traj.status,
        "converged_to": traj.converged_to,
        "envelope": "pass" if traj.envelope_ok() else "fail",
        "oscillations": traj.sign_changes_of_w_minus_w0,
        "max_energy_violation": traj.max_energy_violation,
        "decay_slope_fit": sol.decay_slope_fit,
        "decay_slope_expected": -c.nu_minus,
        "lambda_fit": sol.lambda_fit,
        "weak_form_residual": _weak_residual(sol, prm, o["seed"]),
        "in_S": regions.membership_S(prm),
    }
    text = dumps_report(summary)
    write_text(out_dir / "summary.json", text)
    _emit(text, o["out"])
    return EXIT_PASS


def _parse_radii(text, default):
    if text is None:
        return default
    try:
        radii = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise UsageError("--radii must be comma-separated numbers") from None
    if len(radii) < 2 or min(radii) <= 0:
        raise UsageError("--radii needs at least two positive values")
    return radii


def cmd_check(o, target) -> int:
    o["format"] = o["format"] or "json"
    prm = _params(o)
    c = derive(prm)
    if o["source"] == "singular":
        u = singular_solution(c)
    elif o["source"] == "shoot":
        _, u = _shoot(prm, o)
    else:
        raise UsageError("--source must be shoot or singular")
    doc = {"target": target, "source": o["source"], "params": prm.as_dict()}
    if target == "stability":
        margin = stability.hardy_sufficient(prm).margin
        res = stability.adversarial_search(u, prm, threshold=o["threshold"])
        ok = res.found is None
        doc.update(hardy_margin=margin, **res.as_dict())
        line = f"hardy margin {margin:.6g}, min Q/gradient {res.best_ratio:.6g}"
        if res.found is not None:
            f = res.found
            line += (f"; negative Q for the bump at center {f.center_log_r:.4g}, "
                     f"half width {f.half_width_log_r:.4g} (log r)")
    elif target == "prop31":
        radii = _parse_radii(o["radii"], [2.0 ** k for k in range(7)])
        sw = estimates.verify_prop31(u, prm, o["gamma"], radii=radii)
        ok = sw.bounded and all(np.isfinite(r.fitted_constant) for r in sw.reports)
        doc.update(sw.as_dict())
        line = (f"fitted constant {sw.reports[-1].fitted_constant:.6g}, "
                f"last-step growth {sw.constant_slope:.3g}, exponent {sw.exponent:.6g}")
    elif target == "pohozaev":
        rep = estimates.pohozaev_check(u, prm, o["sigma"], o["R"])
        doc.update(rep.as_dict())
        ok = rep.residual < o["tol"]
        line = f"residual {rep.residual:.3e} (tol {o['tol']:.1e})"
        if o["source"] == "singular":
            exact = estimates.pohozaev_power_law(prm, o["sigma"], o["R"])
            dev = abs(rep.lhs - exact.lhs) / max(abs(exact.lhs), 1.0)
            doc["closed_form"] = exact.as_dict()
            doc["closed_form_deviation"] = dev
            ok = ok and exact.residual < o["tol"] and dev < o["tol"]
            line += f", closed-form deviation {dev:.3e}"
    else:
        radii = _parse_radii(o["radii"], [2.0 ** k for k in range(1, 9)])
        rep = estimates.annulus_growth(u, prm, o["gamma"], radii)
        doc.update(rep.as_dict())
        ok = rep.envelope_ok
        line = f"tail rate {rep.tail_rate:.6g}, exponent {rep.exponent:.6g}"
    doc["pass"] = ok
    print(f"{target}: {'PASS' if ok else 'FAIL'} ({line})")
    if o["out"] not in (None, "-"):
        write_text(o["out"], _render(doc, o))
    return EXIT_PASS if ok else EXIT_FAIL


_NEGATIVE = re.compile(r"^-[\d.]")


def _join_negative_values(argv):
    """Rewrite ``--flag -0.3:0.2:5`` as ``--flag=-0.3:0.2:5``; argparse would
    otherwise read a range starting with a minus sign as an option."""
    out = []
    for tok in argv:
        if out and _NEGATIVE.match(tok) and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        if args.command == "exponents":
            o = _resolve(args, [PARAMS, COMMON])
            return cmd_exponents(o)
        if args.command == "sweep":
            o = _resolve(args, [PARAMS, COMMON])
            o["format"] = o["format"] or "csv"
            return cmd_sweep(o)
        if args.command == "solve":
            o = _resolve(args, [PARAMS, SHOOT, COMMON])
            return cmd_solve(o)
        o = _resolve(args, [PARAMS, CHECK, SHOOT, COMMON])
        return cmd_check(o, args.target)
    except (ParameterError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS
    except DynamicsError as exc:
        print(f"dynamics error: {exc}", file=sys.stderr)
        return EXIT_DYNAMICS
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
