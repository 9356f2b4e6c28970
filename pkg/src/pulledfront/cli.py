"""Command-line entry point orchestrating the front / spectrum / Green's
function / decay pipeline with persistent artifacts and machine-readable
reports.

Every command reads a JSON run configuration (reference defaults when no
--config is given), writes a deterministic JSON report embedding the config
and profile hashes it consumed, and exits with 0 on pass, 1 on internal
error, 2 on invalid configuration, 3 on verification failure, 64 on usage
error.  Timestamps live in their own report field so the remaining bytes
are reproducible.
"""

import argparse
import copy
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import evans as evans_mod
from . import front as front_mod
from . import greens as greens_mod
from . import simulate as simulate_mod
from .model import (ModelError, ModelParameters, WeightFunction,
                    derive_constants, validate_parameters)
from .odesys import CoefficientField

SCHEMA_VERSION = 1

EXIT_PASS = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_VERIFY = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class VerificationFailure(Exception):
    pass


DEFAULT_CONFIG = {
    "schema_version": SCHEMA_VERSION,
    "params": {"a": 0.75, "b": 2.0, "sigma": 1.0, "r": 0.2},
    "delta": 0.085,
    "front": {"L": 80.0, "n": 8000, "relax_T": 2000.0},
    "spectrum": {"L": 80.0, "n": 4000},
    "evans": {"L": 170.0, "n": 17000, "M_l": None},
    "green": {
        "lambdas": [1e-2, 1e-3, 1e-4],
        "x": 3.0, "y": 2.0,
        "temporal": True,
        "temporal_ts": [5.0, 10.0, 20.0, 40.0],
        "heat_t": 1.0, "heat_dist": 2.0,
    },
    "simulate": {
        "L": 400.0, "n": 40000, "T": 200.0,
        "eps": 1e-2, "center": 8.0, "width": 2.0,
    },
}


def _deep_merge(base, override):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], val)
        else:
            out[key] = val
    return out


class RunConfig:
    """Validated run configuration plus its content hash."""

    def __init__(self, data):
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError("unrecognized schema_version %r"
                              % data.get("schema_version"))
        self.data = data
        blob = json.dumps(data, sort_keys=True).encode()
        self.sha256 = hashlib.sha256(blob).hexdigest()
        p = data["params"]
        validate_parameters(p["a"], p["b"], p["sigma"], p["r"])
        self.params = ModelParameters(a=float(p["a"]), b=float(p["b"]),
                                      sigma=float(p["sigma"]),
                                      r=float(p["r"]))
        self.dc = derive_constants(self.params, delta=float(data["delta"]))
        self.weight = WeightFunction(delta=self.dc.delta,
                                     gamma_star=self.dc.gamma_star)

    def section(self, name):
        return self.data[name]


def load_config(path):
    if path is None:
        return RunConfig(copy.deepcopy(DEFAULT_CONFIG))
    if not os.path.exists(path):
        raise UsageError("config file not found: %s" % path)
    try:
        with open(path) as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config is not valid JSON: %s" % exc)
    if not isinstance(user, dict):
        raise ConfigError("config root must be a JSON object")
    return RunConfig(_deep_merge(DEFAULT_CONFIG, user))


def _thread_cap():
    raw = os.environ.get("PULLEDFRONT_THREADS")
    if raw is None:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError("PULLEDFRONT_THREADS must be an integer, got %r"
                          % raw)
    if cap < 1:
        raise ConfigError("PULLEDFRONT_THREADS must be >= 1")
    return cap


def _fmt(x):
    return format(float(x), ".17g")


def _clabel(z):
    z = complex(z)
    if z.imag == 0.0:
        return _fmt(z.real)
    return "%s%+sj" % (_fmt(z.real), _fmt(z.imag))


def _jsonify(obj):
    """Decimal output at 17 significant digits, complex as re/im pairs."""
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _fmt(obj.real), "im": _fmt(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return _fmt(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonify(v) for v in obj.tolist()]
    return obj


def write_report(out_dir, name, body, config, prof_hash=None):
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": name,
        "config_sha256": config.sha256,
        "profile_sha256": prof_hash,
        "report": _jsonify(body),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    path = os.path.join(out_dir, "%s_report.json" % name)
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _log(args, msg):
    if not args.quiet:
        print(msg, file=sys.stderr)


def _get_profile(config, args, L, n):
    """Load the profile artifact if one was supplied, else solve fresh."""
    if getattr(args, "profile", None):
        if not os.path.exists(args.profile):
            raise UsageError("profile file not found: %s" % args.profile)
        return front_mod.load_profile(args.profile, params=config.params)
    return front_mod.solve_front(config.params, config.dc, L=L, n=n)


def _field_for(config, args, section):
    sec = config.section(section)
    profile = _get_profile(config, args, sec["L"], sec["n"])
    field = CoefficientField(profile, config.weight, config.params, config.dc)
    return profile, field


# ---------------------------------------------------------------------------
# section runners shared by the individual commands and verify-all


def _front_section(config, profile=None):
    sec = config.section("front")
    if profile is None:
        profile = front_mod.solve_front(config.params, config.dc,
                                        L=sec["L"], n=sec["n"])
    relaxed = front_mod.relax_to_front(config.params, config.dc,
                                       L=sec["L"], n=sec["n"],
                                       T=sec["relax_T"])
    relax_gap = max(float(np.max(np.abs(profile.U - relaxed.U))),
                    float(np.max(np.abs(profile.V - relaxed.V))))
    fit = front_mod.front_decay_rate_plus(profile)
    gamma_err = abs(fit.gamma_fit - config.dc.gamma_star) / config.dc.gamma_star
    ratio_err = abs(fit.ratio - fit.ratio_expected) / abs(fit.ratio_expected)
    ok = (profile.residual < 1e-8 and relax_gap <= 1e-4
          and gamma_err <= 0.02 and ratio_err <= 0.05)
    body = {
        "residual": profile.residual,
        "relaxation_gap": relax_gap,
        "gamma_fit": fit.gamma_fit,
        "gamma_star": config.dc.gamma_star,
        "gamma_rel_error": gamma_err,
        "component_ratio": fit.ratio,
        "component_ratio_expected": fit.ratio_expected,
        "verdict": "PASS" if ok else "FAIL",
    }
    return ok, body, profile


def _spectrum_section(config, profile):
    sec = config.section("spectrum")
    vals = evans_mod.discrete_spectrum_oracle(
        config.params, config.weight, profile, L=sec["L"], n=sec["n"],
        dc=config.dc)
    vals = sorted(vals, key=lambda z: -z.real)
    ok = len(vals) > 0 and max(v.real for v in vals) < 0.0
    body = {
        "n_eigenvalues": len(vals),
        "max_real_part": max(v.real for v in vals) if vals else None,
        "leading_eigenvalues": list(vals[:20]),
        "verdict": "PASS" if ok else "FAIL",
    }
    return ok, body


def _evans_section(config, field):
    sec = config.section("evans")
    contour = evans_mod.sector_contour(config.dc, M_l=sec["M_l"])
    winding = evans_mod.winding_number(field, contour)
    origin = evans_mod.evans_origin(field)
    ok = winding == 0 and abs(origin.limit) > 0.1
    body = {
        "winding_number": winding,
        "contour_points": len(contour),
        "origin_limit": origin.limit,
        "origin_limit_abs": abs(origin.limit),
        "verdict": "PASS" if ok else "FAIL",
    }
    return ok, body


def _green_bounds_section(config, field):
    sec = config.section("green")
    scan = greens_mod.h_bound_scan(field, [complex(l) for l in sec["lambdas"]])
    heat, heat_imag = greens_mod.heat_kernel_quadrature(t=sec["heat_t"],
                                                        dist=sec["heat_dist"])
    heat_exact = (math.exp(-sec["heat_dist"] ** 2 / (4.0 * sec["heat_t"]))
                  / math.sqrt(math.pi * sec["heat_t"]))
    heat_err = abs(heat - heat_exact)
    ok = scan.passed and heat_err < 1e-6
    body = {
        "scan_sups": {_clabel(l): s for l, s in scan.sups.items()},
        "scan_variation": scan.variation,
        "scan_passed": scan.passed,
        "heat_kernel_value": heat,
        "heat_kernel_exact": heat_exact,
        "heat_kernel_error": heat_err,
        "verdict": "PASS" if ok else "FAIL",
    }
    return ok, body


def _temporal_section(config, field):
    sec = config.section("green")
    ts = [float(t) for t in sec["temporal_ts"]]
    curve = greens_mod.temporal_green_curve(field, ts, sec["x"], sec["y"])
    g11 = np.array([abs(tg.matrix[0, 0]) for tg in curve])
    slope = float(np.polyfit(np.log(ts), np.log(g11), 1)[0])
    ok = abs(slope + 1.5) <= 0.15
    body = {
        "ts": ts,
        "g11": list(g11),
        "slope": slope,
        "slope_target": -1.5,
        "slope_tolerance": 0.15,
        "verdict": "PASS" if ok else "FAIL",
    }
    return ok, body


def _simulate_section(config):
    sec = config.section("simulate")
    profile = front_mod.solve_front(config.params, config.dc,
                                    L=sec["L"], n=sec["n"])
    diag = simulate_mod.run_decay_experiment(
        config.params, config.dc, profile,
        perturbation_cfg=dict(eps=sec["eps"], center=sec["center"],
                              width=sec["width"]),
        T=sec["T"], weight=config.weight)
    ok = abs(diag.exponent + 1.5) <= 0.15
    ci = 2.0 * diag.exponent_stderr
    body = {
        "exponent": diag.exponent,
        "exponent_stderr": diag.exponent_stderr,
        "confidence_interval": [diag.exponent - ci, diag.exponent + ci],
        "fit_window": list(diag.fit_window),
        "fit_window_rationale": ("window starts at t=20 so the transient "
                                 "from the Gaussian data clears"),
        "n_samples": len(diag.times),
        "verdict": "PASS" if ok else "FAIL",
    }
    return ok, body, diag, profile


# ---------------------------------------------------------------------------
# commands


def cmd_front(config, args):
    ok, body, profile = _front_section(config)
    prof_hash = front_mod.profile_hash(profile)
    front_mod.save_profile(profile,
                           os.path.join(args.out, "front_profile.json"))
    path = write_report(args.out, "front", body, config, prof_hash)
    _log(args, "front: %s (%s)" % (body["verdict"], path))
    return EXIT_PASS if ok else EXIT_VERIFY


def cmd_spectrum(config, args):
    sec = config.section("spectrum")
    profile = _get_profile(config, args, sec["L"], sec["n"])
    ok, body = _spectrum_section(config, profile)
    path = write_report(args.out, "spectrum", body, config,
                        front_mod.profile_hash(profile))
    _log(args, "spectrum: %s (%s)" % (body["verdict"], path))
    return EXIT_PASS if ok else EXIT_VERIFY


def cmd_evans(config, args):
    profile, field = _field_for(config, args, "evans")
    prof_hash = front_mod.profile_hash(profile)
    if args.lam is not None:
        sample = evans_mod.evans(args.lam, field)
        body = {
            "lambda": args.lam,
            "value": sample.value,
            "log_scale": sample.log_scale,
            "method": sample.method,
        }
        path = write_report(args.out, "evans", body, config, prof_hash)
        _log(args, "evans probe at lambda=%s (%s)" % (args.lam, path))
        return EXIT_PASS
    ok, body = _evans_section(config, field)
    path = write_report(args.out, "evans", body, config, prof_hash)
    _log(args, "evans: %s (%s)" % (body["verdict"], path))
    return EXIT_PASS if ok else EXIT_VERIFY


def cmd_green(config, args):
    profile, field = _field_for(config, args, "evans")
    prof_hash = front_mod.profile_hash(profile)
    sec = config.section("green")
    if args.lam is not None:
        asm = greens_mod.green_assembly(field, args.lam, sec["y"])
        body = {
            "lambda": args.lam,
            "y": sec["y"],
            "matrix_at_x": {_clabel(x): asm.matrix(np.array([x]))[0]
                            for x in (sec["x"], -sec["x"])},
        }
        path = write_report(args.out, "green", body, config, prof_hash)
        _log(args, "green probe at lambda=%s (%s)" % (args.lam, path))
        return EXIT_PASS
    ok, body = _green_bounds_section(config, field)
    if sec["temporal"]:
        t_ok, t_body = _temporal_section(config, field)
        body["temporal"] = t_body
        ok = ok and t_ok
        body["verdict"] = "PASS" if ok else "FAIL"
    path = write_report(args.out, "green", body, config, prof_hash)
    _log(args, "green: %s (%s)" % (body["verdict"], path))
    return EXIT_PASS if ok else EXIT_VERIFY


def _write_timeseries(out_dir, diag):
    path = os.path.join(out_dir, "decay_timeseries.csv")
    with open(path, "w") as fh:
        fh.write("t,theta_p,theta_q,mass_p,mass_q\n")
        for row in zip(diag.times, diag.theta_p, diag.theta_q,
                       diag.mass_p, diag.mass_q):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def cmd_simulate(config, args):
    ok, body, diag, profile = _simulate_section(config)
    csv_path = _write_timeseries(args.out, diag)
    sec = config.section("simulate")
    manifest = {
        "params": config.data["params"],
        "delta": config.data["delta"],
        "grid": {"L": sec["L"], "n": sec["n"],
                 "dt": 0.8 * simulate_mod.reaction_budget(config.params)},
        "perturbation": {"eps": sec["eps"], "center": sec["center"],
                         "width": sec["width"]},
        "seeds": None,
        "timeseries_csv": os.path.basename(csv_path),
    }
    manifest.update(body)
    path = write_report(args.out, "simulate", manifest, config,
                        front_mod.profile_hash(profile))
    _log(args, "simulate: %s (%s)" % (body["verdict"], path))
    return EXIT_PASS if ok else EXIT_VERIFY


def cmd_verify_all(config, args):
    cap = _thread_cap()
    ok_front, body_front, profile = _front_section(config)
    _log(args, "verify-all: front %s" % body_front["verdict"])
    sec_ev = config.section("evans")
    long_profile = front_mod.solve_front(config.params, config.dc,
                                         L=sec_ev["L"], n=sec_ev["n"])
    field = CoefficientField(long_profile, config.weight, config.params,
                             config.dc)

    sections = {
        "spectrum": lambda: _spectrum_section(config, profile),
        "evans_winding": lambda: _evans_section(config, field),
        "green_bounds": lambda: _green_bounds_section(config, field),
        "temporal_slope": lambda: _temporal_section(config, field),
        "nonlinear_slope": lambda: _simulate_section(config)[:2],
    }
    results = {"front": (ok_front, body_front)}
    with ThreadPoolExecutor(max_workers=cap) as pool:
        futures = {name: pool.submit(fn) for name, fn in sections.items()}
        for name, fut in futures.items():
            try:
                ok, body = fut.result()
            except Exception as exc:  # section outcome, not a crash
                ok, body = False, {"verdict": "FAIL",
                                   "error": "%s: %s"
                                   % (type(exc).__name__, exc)}
            results[name] = (ok, body)
            _log(args, "verify-all: %s %s" % (name, body["verdict"]))

    verdict = {name: ("PASS" if ok else "FAIL")
               for name, (ok, _) in results.items()}
    body = {
        "verdict": verdict,
        "sections": {name: body for name, (_, body) in results.items()},
    }
    write_report(args.out, "verify_all", body, config,
                 front_mod.profile_hash(profile))
    print(json.dumps(verdict, indent=2, sort_keys=True))
    return EXIT_PASS if all(ok for ok, _ in results.values()) else EXIT_VERIFY


COMMANDS = {
    "front": cmd_front,
    "spectrum": cmd_spectrum,
    "evans": cmd_evans,
    "green": cmd_green,
    "simulate": cmd_simulate,
    "verify-all": cmd_verify_all,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_lambda(raw):
    parts = raw.split(",")
    if len(parts) != 2:
        raise UsageError("--lambda expects RE,IM, got %r" % raw)
    try:
        return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        raise UsageError("--lambda expects RE,IM, got %r" % raw)


def build_parser():
    parser = _Parser(prog="pulledfront",
                     description="Critical front construction, spectral "
                                 "certification, and decay verification for "
                                 "the two-species competition system.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="JSON run configuration (reference defaults "
                            "when omitted)")
        p.add_argument("--out", default="pulledfront_out",
                       help="directory for reports and artifacts")
        p.add_argument("--profile", default=None,
                       help="reuse a saved front profile artifact")
        p.add_argument("--lambda", dest="lam", default=None,
                       help="single-point probe RE,IM (evans, green)")
        p.add_argument("--quiet", action="store_true",
                       help="suppress progress output")
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if args.lam is not None:
            args.lam = _parse_lambda(args.lam)
        config = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](config, args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ModelError) as exc:
        print("invalid configuration: %s: %s"
              % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_CONFIG
    except simulate_mod.SimulationError as exc:
        print("verification failure: %s: %s"
              % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_VERIFY
    except (front_mod.FrontError, evans_mod.EvansError,
            greens_mod.GreensError) as exc:
        print("verification failure: %s: %s"
              % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_VERIFY
    except Exception as exc:  # pragma: no cover - defensive
        print("internal error: %s: %s"
              % (type(exc).__name__, exc), file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
