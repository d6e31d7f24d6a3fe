"""Command-line front end.

Exit status: 0 success, 1 pipeline error, 2 usage error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import io as mio
from .estimator import resolve_field
from .field import (BUILTIN_NAMES, FieldSpecError, SingularPointError, curl_residual, eval_field,
                    gauge_for, parse_field_spec, probe_points, relative_divergence)
from .pipeline import PipelineConfig, certify, compute_profile, weak_field_ratio
from .verify import FORM_RTOL, certificate_audit, default_suite
from .weights import WeightCertificate, angular_infimum, w1_potential, w2_profile

EXIT_PIPELINE = 1
EXIT_USAGE = 2
EXIT_VERIFY = 3


class UsageError(Exception):
    pass


def _param(text):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} needs a numeric value") from None


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--field", default=None, help="built-in name or path to a JSON field spec")
    common.add_argument("--param", type=_param, action="append", default=[], metavar="K=V")
    common.add_argument("--r-min", type=float, default=0.1)
    common.add_argument("--r-max", type=float, default=10.0)
    common.add_argument("--nr", type=int, default=64)
    common.add_argument("--ntheta", type=int, default=64)
    common.add_argument("--quad-order", type=int, default=32)
    common.add_argument("--nmax-intervals", type=int, default=64)
    common.add_argument("--method", choices=("boundary", "surface"), default="boundary")
    common.add_argument("--tol", type=float, default=FORM_RTOL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    parser = argparse.ArgumentParser(prog="maghardy", description="Magnetic Hardy weight certificates")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check-field", parents=[common], help="divergence and gauge audits")
    g = sub.add_parser("gauge", parents=[common], help="vector potential at probe points")
    g.add_argument("--npoints", type=int, default=32)
    sub.add_parser("flux", parents=[common], help="cap flux profile")
    sub.add_parser("weight", parents=[common], help="radial weight w2 profile")
    c = sub.add_parser("certify", parents=[common], help="weight certificate")
    c.add_argument("--theorem", choices=("auto", "T1", "T2", "AB"), default="auto")
    c.add_argument("--r0", type=float, default=None)
    v = sub.add_parser("verify", parents=[common], help="audit a certificate on a test suite")
    v.add_argument("--cert", required=True)
    v.add_argument("--suite", default="default")
    v.add_argument("--nsuite", type=int, default=20)
    sub.add_parser("ab", parents=[common], help="closed-form constant for the ab3d field")
    s = sub.add_parser("scale", parents=[common], help="weak-field study w2(alpha B) / alpha^2")
    s.add_argument("--alpha-list", type=_float_list, default=[1e-2, 1e-3])
    return parser


def _load_field(args, default=None):
    name = args.field or default
    if name is None:
        raise UsageError("--field is required")
    params = dict(args.param)
    if name in BUILTIN_NAMES:
        return resolve_field(name, params)
    if not os.path.exists(name):
        raise UsageError(f"--field {name!r} is neither a built-in ({', '.join(BUILTIN_NAMES)}) nor a file")
    with open(name, encoding="utf-8") as fh:
        return resolve_field(fh.read(), params)


def _config(args, **extra):
    try:
        return PipelineConfig(r_min=args.r_min, r_max=args.r_max, n_r=args.nr, n_theta=args.ntheta,
                              quad_order=args.quad_order, n_max=args.nmax_intervals,
                              method=args.method, **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(args, text):
    if args.out:
        mio.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_check_field(args):
    spec = _load_field(args)
    cfg = _config(args)
    pts = probe_points(64, cfg.r_min, cfg.r_max, args.seed)
    r = np.linalg.norm(pts, axis=-1)
    doc = {"field": spec.name, "singular_set": spec.singular_set, "n_probe": len(pts)}
    try:
        doc["divergence_relative_max"] = float(np.max(relative_divergence(spec, pts, 1e-5 * r)))
        gauge = gauge_for(spec, cfg.quad_order)
        A = gauge(pts)
        B = eval_field(spec, pts)
        scale = max(float(np.max(np.linalg.norm(B, axis=-1))), 1e-300)
        res = curl_residual(gauge, spec, pts, 1e-4 * r)
        doc["gauge"] = gauge.kind
        doc["curl_residual_relative_max"] = float(np.max(res) / scale)
        doc["x_dot_A_max"] = float(np.max(np.abs(np.sum(pts * A, axis=-1))))
    except SingularPointError as exc:
        doc["skipped"] = str(exc)
    _emit(args, mio.json_text(doc))
    return 0


def cmd_gauge(args):
    spec = _load_field(args)
    cfg = _config(args)
    pts = probe_points(args.npoints, cfg.r_min, cfg.r_max, args.seed)
    A = gauge_for(spec, cfg.quad_order)(pts)
    if args.format == "json":
        _emit(args, mio.json_text({"points": pts.tolist(), "A": A.tolist()}))
    else:
        _emit(args, mio.csv_text(("x", "y", "z", "Ax", "Ay", "Az"), np.hstack([pts, A])))
    return 0


def cmd_flux(args):
    spec = _load_field(args)
    profile = compute_profile(spec, _config(args))
    _emit(args, mio.flux_json(profile) if args.format == "json" else mio.flux_csv(profile))
    return 0


def cmd_weight(args):
    spec = _load_field(args)
    cfg = _config(args)
    res = certify(spec, cfg) if args.format == "json" else None
    if res is not None and not isinstance(res, WeightCertificate):
        _emit(args, mio.weight_json(res.w2, res.intervals))
        return 0
    w2 = w2_profile(compute_profile(spec, cfg))
    _emit(args, mio.weight_json(w2) if args.format == "json" else mio.weight_csv(w2))
    return 0


def cmd_certify(args):
    spec = _load_field(args)
    res = certify(spec, _config(args, theorem=args.theorem, r0=args.r0))
    cert = res if isinstance(res, WeightCertificate) else res.certificate
    _emit(args, mio.certificate_json(cert))
    return 0


def cmd_verify(args):
    if args.suite != "default":
        raise UsageError(f"unknown suite {args.suite!r}; only 'default' is available")
    try:
        cert = mio.read_certificate(args.cert)
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise UsageError(f"cannot read certificate {args.cert!r}: {exc}") from None
    if args.field:
        spec = _load_field(args)
    elif cert.field is not None:
        spec = parse_field_spec(cert.field)
    else:
        raise UsageError("certificate carries no field; pass --field")
    suite = default_suite(cert, n=args.nsuite, seed=args.seed)
    reports = certificate_audit(cert, spec, None, suite, rtol=args.tol)
    for rep in reports:
        print(rep.line(), file=sys.stderr)
    if args.out:
        mio.atomic_write(args.out, mio.reports_jsonl(reports))
    else:
        sys.stdout.write(mio.reports_jsonl(reports))
    return 0 if all(r.passed for r in reports) else EXIT_VERIFY


def cmd_ab(args):
    spec = _load_field(args, default="ab3d")
    if spec.name != "ab3d":
        raise UsageError("the ab subcommand needs the ab3d field")
    cert = certify(spec, _config(args, theorem="AB"))
    # flux-pipeline route: w1 from the boundary flux, then the widest witness
    profile = compute_profile(spec, _config(args))
    w2 = w2_profile(profile)
    w1 = w1_potential(profile)
    levels = [w.M for w in w2.witnesses if w is not None]
    doc = cert.to_dict()
    doc["pipeline"] = {
        "witness_level_min": float(min(levels)) if levels else 0.0,
        "angular_infimum_min": float(min(angular_infimum(row) for row in w1)),
    }
    _emit(args, mio.json_text(doc))
    return 0


def cmd_scale(args):
    spec = _load_field(args, default="ab3d")
    cfg = _config(args)
    alphas = args.alpha_list
    if not alphas or any(a <= 0 for a in alphas):
        raise UsageError("--alpha-list needs positive values")
    out = weak_field_ratio(spec, alphas, cfg)
    if not out:
        print("w2 vanishes for every alpha; nothing to compare", file=sys.stderr)
        rows = np.column_stack([cfg.r_grid()] + [np.zeros(cfg.n_r) for _ in alphas])
    else:
        rows = np.column_stack([cfg.r_grid()] + [ratio for _, ratio in out])
    header = ["r"] + [f"ratio_alpha={a:g}" for a in alphas]
    if args.format == "json":
        _emit(args, mio.json_text({"r": rows[:, 0].tolist(),
                                   "ratios": {h: rows[:, i + 1].tolist() for i, h in enumerate(header[1:])}}))
    else:
        _emit(args, mio.csv_text(header, rows))
    return 0


COMMANDS = {
    "check-field": cmd_check_field, "gauge": cmd_gauge, "flux": cmd_flux, "weight": cmd_weight,
    "certify": cmd_certify, "verify": cmd_verify, "ab": cmd_ab, "scale": cmd_scale,
}


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FieldSpecError, SingularPointError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PIPELINE


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
