"""Command-line front end (``minkimm``).

Exit codes: 0 success, 2 validation error (JSON record on stderr),
64 usage error, 74 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alignment import align_hypersurface, align_manifold
from .errors import BadParams, ImmersionError, ManifestError
from .experiments import STABILITY_FIXTURES, stability_table
from .fields_io import ENCODINGS, read_manifest, write_fields
from .fixtures import default_chart, generate
from .grid import GridChart, flatness_residual
from .hypersurface import (
    FundamentalForms,
    RiggedImmersionResult,
    RiggedOperators,
    classical_gc_residual,
    fundamental_form_defect,
    generalized_gc_residual,
    immerse_hypersurface_forms,
    immerse_hypersurface_rigged,
    rigged_reconstruction_defect,
)
from .lorentz import certify_lorentz, lorentz_decompose, lorentz_decompose_anchored, make_anchor
from .manifold import ImmersionResult, immerse_manifold, isometry_residual
from .pfaff import PfaffCoeffs, pfaff_compatibility_residual, pfaff_dependence_gap, pfaff_integrate

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_USAGE = 64
EXIT_IO = 74


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _json_arg(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"not valid JSON: {text!r}") from exc


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def _fmt(x):
    return "%.12g" % x


def _emit(args, report, text=None):
    if args.json or text is None:
        print(json.dumps(_clean(report), indent=2))
    else:
        print(text)


def _save_report(out, report):
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(_clean(report), indent=2) + "\n")


def _index(value, chart, name):
    if value is None:
        return None
    idx = tuple(int(i) for i in value)
    if not chart.contains(idx):
        raise BadParams(f"{name} lies outside the chart", index=list(idx), samples=list(chart.samples))
    return idx


def _result_fields(result):
    fields = {"f": result.f, "frame": result.frame}
    if isinstance(result, RiggedImmersionResult):
        fields["rigging"] = result.rigging
    return fields


def _result_meta(result, kind, extra=None):
    meta = {"kind": kind, **result.summary()}
    meta.update(extra or {})
    return meta


def _load_result(path):
    chart, fields, meta = read_manifest(path)
    try:
        base = tuple(meta["base_point"])
        F = np.asarray(meta["base_frame"], dtype=float)
    except KeyError as exc:
        raise ManifestError("result manifest lacks base data", path=str(path)) from exc
    if meta.get("kind") == "hypersurface":
        return RiggedImmersionResult(fields["f"], fields["rigging"], fields["frame"], base, F,
                                     meta.get("det_frame_min", float("nan")))
    return ImmersionResult(fields["f"], fields["frame"], base, F, meta.get("det_frame_min", float("nan")))


def _load_forms(fields, meta):
    if "g" not in fields or "K" not in fields:
        raise ManifestError("forms manifest needs fields g and K")
    return FundamentalForms(fields["g"].chart, fields["g"], fields["K"], meta.get("lambda"))


# --- commands ---------------------------------------------------------------

def cmd_decompose(args):
    cert = certify_lorentz(np.asarray(args.matrix, dtype=float), args.epsilon)
    if args.anchor is not None:
        anchor = make_anchor(certify_lorentz(np.asarray(args.anchor, dtype=float), args.epsilon))
        F = lorentz_decompose_anchored(anchor, cert)
    else:
        F = lorentz_decompose(cert)
    report = {"F": F, "eigvals": cert.eigvals, "epsilon": cert.epsilon}
    text = "F = [" + ", ".join("[" + ", ".join(_fmt(x) for x in row) + "]" for row in F) + "]"
    _emit(args, report, text)


def cmd_curvature(args):
    _, fields, _ = read_manifest(args.manifest, [args.field])
    rep = flatness_residual(fields[args.field], args.p)
    report = {**rep.to_dict(), "nonflat": rep.max_abs > args.flat_tol, "flat_tol": args.flat_tol}
    _emit(args, report, f"max |R| = {_fmt(rep.max_abs)}  L^p = {_fmt(rep.lp_norm)}  "
                        f"{'nonflat' if report['nonflat'] else 'flat within tolerance'}")


def _coeffs_from(path):
    chart, fields, _ = read_manifest(path)
    if "A" not in fields:
        raise ManifestError("Pfaff manifest needs field A (shape [m, l, l])")
    get = lambda k: fields[k].data if k in fields else None
    return PfaffCoeffs(chart, get("A"), get("B"), get("C"))


def cmd_pfaff(args):
    coeffs = _coeffs_from(args.manifest)
    ch = coeffs.chart
    if args.verb == "check":
        rep = pfaff_compatibility_residual(coeffs, args.p)
        _emit(args, rep.to_dict(), f"compatibility max = {_fmt(rep.max_abs)}  L^p = {_fmt(rep.lp_norm)}")
        return
    x0 = _index(args.x0, ch, "x0") or ch.center
    if args.verb == "integrate":
        Y = pfaff_integrate(coeffs, x0, args.y0, args.sweep)
        write_fields(args.output, {"Y": Y}, {"kind": "pfaff_solution", "x0": list(x0)}, args.encoding)
        report = {"x0": list(x0), "shape": list(Y.shape), "output": str(args.output)}
        _emit(args, report, f"wrote {Path(args.output) / 'manifest.json'}")
        return
    other = _coeffs_from(args.other)
    y02 = args.y0_other if args.y0_other is not None else args.y0
    gap, inp = pfaff_dependence_gap(coeffs, other, args.y0, y02, x0, args.p, args.sweep)
    report = {"gap_norm": gap, "input_gap": inp, "ratio": gap / inp if inp > 0 else float("nan")}
    _emit(args, report, f"gap = {_fmt(gap)}  input = {_fmt(inp)}  ratio = {_fmt(report['ratio'])}")


def cmd_immerse(args):
    _, fields, _ = read_manifest(args.manifest, [args.field])
    g = fields[args.field]
    res = immerse_manifold(g, _index(args.x_star, g.chart, "x_star"), args.epsilon)
    iso = isometry_residual(res, g, args.p)
    flat = flatness_residual(g, args.p)
    out = Path(args.output)
    write_fields(out, _result_fields(res), _result_meta(res, "manifold", {"epsilon": args.epsilon}), args.encoding)
    report = {"isometry_residual": iso.to_dict(), "flatness_residual": flat.to_dict(), **res.summary()}
    _save_report(out, report)
    _emit(args, report, f"isometry defect (recomputed df) = {_fmt(iso.recomputed.max_abs)}  "
                        f"min |det F| = {_fmt(res.det_frame_min)}  wrote {out}")


def cmd_hyper(args):
    chart, fields, meta = read_manifest(args.manifest)
    if args.verb == "check-gc":
        if all(k in fields for k in ("Gamma", "K", "L", "M")):
            ops = RiggedOperators(chart, fields["Gamma"], fields["K"], fields["L"], fields["M"])
            rep, kind = generalized_gc_residual(ops, args.p), "generalized"
        else:
            rep, kind = classical_gc_residual(_load_forms(fields, meta), args.p), "classical"
        report = {"kind": kind, **rep.to_dict()}
        _emit(args, report, f"{kind} Gauss-Codazzi max = {_fmt(rep.max_abs)}  L^p = {_fmt(rep.lp_norm)}")
        return
    x_star = _index(args.x_star, chart, "x_star")
    if args.verb == "immerse-rigged":
        missing = [k for k in ("Gamma", "K", "L", "M") if k not in fields]
        if missing:
            raise ManifestError("rigged manifest lacks operator fields", missing=missing)
        ops = RiggedOperators(chart, fields["Gamma"], fields["K"], fields["L"], fields["M"])
        F_star = None if args.f_star is None else np.asarray(args.f_star, dtype=float)
        res = immerse_hypersurface_rigged(ops, x_star, F_star)
        defect = rigged_reconstruction_defect(res, ops, args.p)
        extra = {}
    else:
        forms = _load_forms(fields, meta)
        res = immerse_hypersurface_forms(forms, x_star, args.epsilon)
        defect = fundamental_form_defect(res, forms, args.p)
        extra = {"lambda": forms.lam, "epsilon": args.epsilon}
    out = Path(args.output)
    write_fields(out, _result_fields(res), _result_meta(res, "hypersurface", extra), args.encoding)
    report = {"defect": defect.to_dict(), **res.summary(), **extra}
    _save_report(out, report)
    _emit(args, report, f"defect max = {_fmt(defect.max_abs)}  min |det F| = {_fmt(res.det_frame_min)}  wrote {out}")


def cmd_align(args):
    r1, r2 = _load_result(args.result1), _load_result(args.result2)
    _, in1, meta1 = read_manifest(args.inputs1)
    _, in2, meta2 = read_manifest(args.inputs2)
    if isinstance(r1, RiggedImmersionResult) != isinstance(r2, RiggedImmersionResult):
        raise BadParams("cannot align a manifold result with a hypersurface result")
    if isinstance(r1, RiggedImmersionResult):
        if args.proper:
            res = align_hypersurface(r1, r2, p=args.p, proper_required=True,
                                     forms1=_load_forms(in1, meta1), forms2=_load_forms(in2, meta2),
                                     epsilon=args.epsilon)
        else:
            ops = []
            for fields in (in1, in2):
                if all(k in fields for k in ("Gamma", "K", "L", "M")):
                    ops.append(RiggedOperators(r1.chart, fields["Gamma"], fields["K"], fields["L"], fields["M"]))
                else:
                    ops.append(None)
            res = align_hypersurface(r1, r2, ops[0], ops[1], p=args.p)
    else:
        if "g" not in in1 or "g" not in in2:
            raise ManifestError("manifold alignment needs metric field g in both input manifests")
        res = align_manifold(r1, r2, in1["g"], in2["g"], args.p, args.epsilon)
    report = res.to_dict()
    _emit(args, report, f"aligned gap W2p = {_fmt(res.aligned_gap_w2p)}  max = {_fmt(res.aligned_gap_max)}  "
                        f"input gap = {_fmt(res.input_gap)}")


def cmd_stability(args):
    table = stability_table(args.fixture, args.samples, tuple(args.deltas), args.seed, args.direction,
                            args.epsilon, args.p)
    lines = [f"{'delta':>10} {'gap':>14} {'input':>14} {'ratio':>10}"]
    for row in table["rows"]:
        lines.append(f"{row['delta']:>10.3g} {row['aligned_gap_w2p']:>14.6g} {row['input_gap']:>14.6g} "
                     f"{row['ratio']:>10.4g}")
    lines.append(f"ratio spread = {_fmt(table['ratio_spread'])}")
    _emit(args, table, "\n".join(lines))


def _parse_params(items):
    params = {}
    for item in items or ():
        if "=" not in item:
            raise BadParams("parameters take the form key=value", param=item)
        k, v = item.split("=", 1)
        params[k] = v
    return params


def cmd_generate(args):
    if args.bounds is not None:
        try:
            mins = tuple(float(b[0]) for b in args.bounds)
            maxs = tuple(float(b[1]) for b in args.bounds)
        except (TypeError, IndexError, ValueError) as exc:
            raise BadParams("bounds must be a list of [min, max] pairs") from exc
        chart = GridChart(mins, maxs, (args.samples,) * len(mins))
    else:
        chart = default_chart(args.fixture, args.samples, args.dim)
    fields, meta = generate(args.fixture, _parse_params(args.param), chart)
    meta["tool_version"] = __version__
    path = write_fields(args.output, fields, meta, args.encoding)
    _emit(args, {"manifest": str(path), "fields": sorted(fields)}, f"wrote {path}")


def cmd_convert(args):
    _, fields, meta = read_manifest(args.manifest)
    path = write_fields(args.output, fields, meta, args.encoding)
    _emit(args, {"manifest": str(path), "encoding": args.encoding}, f"wrote {path}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    pnorm = argparse.ArgumentParser(add_help=False)
    pnorm.add_argument("-p", type=float, default=None, help="L^p exponent (default dim + 2)")
    enc = argparse.ArgumentParser(add_help=False)
    enc.add_argument("--encoding", choices=ENCODINGS, default="raw")

    parser = _Parser(prog="minkimm", description="Isometric immersions into Minkowski space on grid charts.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", parents=[common], help="Lorentz decomposition G = F^T eta F")
    p.add_argument("--matrix", type=_json_arg, required=True)
    p.add_argument("--anchor", type=_json_arg, default=None, help="anchor matrix for the continuous branch")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("curvature", parents=[common, pnorm], help="flatness residual of a metric field")
    p.add_argument("manifest")
    p.add_argument("--field", default="g")
    p.add_argument("--flat-tol", type=float, default=0.05)
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("pfaff", parents=[common, pnorm, enc], help="Pfaff systems (fields A, B, C)")
    p.add_argument("verb", choices=("integrate", "check", "depend"))
    p.add_argument("manifest")
    p.add_argument("other", nargs="?", help="second coefficient manifest (depend)")
    p.add_argument("--x0", type=_json_arg, default=None)
    p.add_argument("--y0", type=_json_arg, default=None)
    p.add_argument("--y0-other", type=_json_arg, default=None)
    p.add_argument("--sweep", type=_json_arg, default=None)
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_pfaff)

    p = sub.add_parser("immerse", parents=[common, pnorm, enc], help="immerse a flat Lorentzian metric")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--field", default="g")
    p.add_argument("--x-star", type=_json_arg, default=None)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_immerse)

    p = sub.add_parser("hyper", parents=[common, pnorm, enc], help="hypersurface checks and immersions")
    p.add_argument("verb", choices=("check-gc", "immerse-rigged", "immerse-forms"))
    p.add_argument("manifest")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--x-star", type=_json_arg, default=None)
    p.add_argument("--f-star", type=_json_arg, default=None)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_hyper)

    p = sub.add_parser("align", parents=[common, pnorm], help="base-point alignment of two results")
    p.add_argument("result1")
    p.add_argument("result2")
    p.add_argument("--inputs1", required=True)
    p.add_argument("--inputs2", required=True)
    p.add_argument("--proper", action="store_true", help="forms mode with proper isometries")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("stability", parents=[common, pnorm], help="gap / input ratio table")
    p.add_argument("fixture", choices=STABILITY_FIXTURES)
    p.add_argument("--samples", type=int, default=33)
    p.add_argument("--deltas", type=_json_arg, default=[1e-2, 1e-3, 1e-4])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--direction", choices=("scale", "random"), default="scale")
    p.add_argument("--epsilon", type=float, default=0.2)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("generate", parents=[common, enc], help="sample an analytic fixture")
    p.add_argument("fixture")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--samples", type=int, default=33)
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--bounds", type=_json_arg, default=None)
    p.add_argument("--param", action="append", help="key=value fixture parameter")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("convert", parents=[common, enc], help="rewrite a manifest in another encoding")
    p.add_argument("manifest")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_convert)
    return parser


def _validate(args):
    if args.command == "pfaff":
        if args.verb in ("integrate", "depend") and args.y0 is None:
            raise UsageError("pfaff integrate/depend need --y0")
        if args.verb == "integrate" and args.output is None:
            raise UsageError("pfaff integrate needs -o/--output")
        if args.verb == "depend" and args.other is None:
            raise UsageError("pfaff depend needs a second manifest")
    if args.command == "hyper" and args.verb != "check-gc" and args.output is None:
        raise UsageError(f"hyper {args.verb} needs -o/--output")
    if args.command == "generate" and args.samples < 4:
        raise UsageError("--samples must be at least 4")


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args)
    except ImmersionError as exc:
        print(json.dumps(_clean(exc.to_dict())), file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
