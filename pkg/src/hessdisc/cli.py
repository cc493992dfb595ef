"""Command-line interface: ``hessdisc {verify, certify, gen-solution, flow}``.

Exit codes
----------
verify        0 chain order holds, 1 violated, 2 input error
certify       0 equality, 1 strict inequality, 3 inconclusive, 2 input error
gen-solution  as certify for the generated field; 2 if the profile is invalid
flow          0 trace written, 2 critical or exterior start / input error

Nothing is written when a command exits with status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from .config import SCHEMA_VERSION, RunConfig, Tolerances, thread_count
from .errors import ConstraintViolated, HessdiscError, SpecError
from .fields import CLOSED_FORM, ScalarField, field_from_spec, load_field_json, load_grid_csv

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INCONCLUSIVE = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# field and profile names


def resolve_field(name: str) -> ScalarField:
    """Built-in name, ``log-family:b``, ``linear:a``, ``power-cap:k``, ``spline:path``,
    a JSON field spec or a grid CSV."""
    from .profiles import profile_from_spec, build_radial_solution
    if name in CLOSED_FORM:
        return field_from_spec({"kind": name})
    key, _, arg = name.partition(":")
    if arg:
        if key == "log-family":
            return build_radial_solution(profile_from_spec(f"log:{arg}")).field()
        if key in ("linear", "spline", "log"):
            return build_radial_solution(profile_from_spec(name)).field()
        if key in CLOSED_FORM:
            param = {"power-cap": "k", "tilted": "k", "constant": "level"}.get(key)
            if param is None:
                raise SpecError(f"{key} takes no parameter")
            try:
                return field_from_spec({"kind": key, param: float(arg)})
            except ValueError as exc:
                raise SpecError(f"bad parameter in {name!r}") from exc
    path = Path(name)
    if path.suffix.lower() == ".json":
        return load_field_json(path)
    if path.suffix.lower() == ".csv":
        try:
            return load_grid_csv(path)
        except OSError as exc:
            raise SpecError(f"cannot read grid file {path}: {exc}") from exc
    raise SpecError(f"unknown field {name!r}")


def resolve_profile(spec: str, seed: int):
    from .profiles import load_profile, random_profile
    if spec == "random":
        return random_profile(np.random.default_rng(seed))
    return load_profile(spec)


# ---------------------------------------------------------------------------
# argument parsing


def _tol_flag(name):
    return "--tol-" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", type=int, default=512, metavar="N", help="grid resolution across the domain")
    common.add_argument("--levels", type=int, default=100, metavar="N", help="number of sampled level values")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv", "both"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for randomised profiles")
    for name in Tolerances.names():
        common.add_argument(_tol_flag(name), dest=f"tol_{name}", type=float, default=None, metavar="X")

    p = argparse.ArgumentParser(prog="hessdisc", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, helptext in (("verify", "evaluate the inequality chain"),
                          ("certify", "run the equality certificate")):
        s = sub.add_parser(cmd, parents=[common], help=helptext)
        s.add_argument("--field", required=True)
    s = sub.add_parser("gen-solution", parents=[common], help="build and check the radial solution of a profile")
    s.add_argument("--g", required=True, help="constant | linear:a | log:b | spline:path | random | profile.json")
    s = sub.add_parser("flow", parents=[common], help="trace the unit normal flow from a point")
    s.add_argument("--field", required=True)
    s.add_argument("--start", required=True, help="x,y")
    s.add_argument("--dir", choices=("outward", "inward"), default="outward")
    return p


def run_config(args, field_name) -> RunConfig:
    tols = Tolerances().updated(**{n: getattr(args, f"tol_{n}") for n in Tolerances.names()
                                   if getattr(args, f"tol_{n}") is not None})
    return RunConfig(field=field_name, resolution=args.grid, levels=args.levels, tolerances=tols,
                     out=args.out, format=args.format, seed=args.seed, threads=thread_count())


def chain_config(rc: RunConfig):
    from .indicatrix import ChainConfig
    if rc.resolution < 128:
        raise SpecError("--grid must be at least 128 for the Hessian quadrature")
    return ChainConfig(resolution=rc.resolution, n_levels=rc.levels, tolerances=rc.tolerances, threads=rc.threads)


# ---------------------------------------------------------------------------
# output


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _write_all(out_dir, files: dict):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)


def _envelope(command, rc: RunConfig, body) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, "config": rc.to_dict(), **body}


# ---------------------------------------------------------------------------
# commands


def cmd_verify(args) -> int:
    from .indicatrix import inequality_chain
    field = resolve_field(args.field)
    rc = run_config(args, args.field)
    rep = inequality_chain(field, chain_config(rc), check=False)
    files = {}
    if rc.format in ("json", "both"):
        files["chain.json"] = _dumps(_envelope("verify", rc, {"chain": rep.to_dict()}))
    if rc.format in ("csv", "both"):
        files["chain_levels.csv"] = _csv_text(["c", "beta", "length", "L", "coarea_density"],
                                              [(r["c"], r["beta"], r["length"], r["L"], r["coarea_density"])
                                               for r in rep.levels])
        files["chain_terms.csv"] = _csv_text(["term", "value"], [(n, v) for n, v in zip(
            ("max_abs_f", "B1", "curv_term", "coarea_term", "hessian_term"), rep.terms)])
    _write_all(rc.out, files)
    terms = " ".join(f"{n}={v:.6g}" for n, v in zip(("max|f|", "B1", "curv", "coarea", "hessian"), rep.terms))
    print(f"verify {args.field}: {terms} chain={'holds' if rep.chain_holds else 'VIOLATED'}")
    for a, b in rep.violations:
        print(f"  order violated: {a} > {b}")
    return EXIT_OK if rep.chain_holds else EXIT_FAIL


_VERDICT_EXIT = {"equality": EXIT_OK, "strict-inequality": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


def _certificate_files(rc, cert, command, extra=None):
    files = {}
    if rc.format in ("json", "both"):
        body = {"certificate": cert.to_dict()}
        if extra:
            body.update(extra)
        files["certificate.json"] = _dumps(_envelope(command, rc, body))
    if rc.format in ("csv", "both"):
        files["certificate.csv"] = _csv_text(
            ["property", "name", "pass", "margin"],
            [(k, v["name"], v["pass"], v.get("margin")) for k, v in sorted(cert.properties.items())])
    return files


def _print_certificate(label, cert):
    print(f"certify {label}: {cert.overall} (gap {cert.equality_gap:.3g})")
    for k, v in sorted(cert.properties.items()):
        status = {True: "pass", False: "FAIL", None: "n/a"}[v["pass"]]
        print(f"  ({k}) {v['name']}: {status}")


def cmd_certify(args) -> int:
    from .indicatrix import equality_certificate
    field = resolve_field(args.field)
    rc = run_config(args, args.field)
    cert = equality_certificate(field, chain_config(rc))
    _write_all(rc.out, _certificate_files(rc, cert, "certify"))
    _print_certificate(args.field, cert)
    return _VERDICT_EXIT[cert.overall]


def cmd_gen_solution(args) -> int:
    from .fields import write_grid_csv
    from .indicatrix import equality_certificate
    from .profiles import build_radial_solution, minimal_bound_check, validate_g
    rc = run_config(args, f"g:{args.g}")
    try:
        g = resolve_profile(args.g, rc.seed)
        sol = build_radial_solution(g)
    except ConstraintViolated as exc:
        rng = exc.t_range
        where = f" on t in ({rng[0]:.6g}, {rng[1]:.6g})" if rng else ""
        print(f"error: profile violates -1/t <= g' <= 0{where}", file=sys.stderr)
        return EXIT_INPUT
    report = validate_g(g)
    margin, t_at = minimal_bound_check(sol)
    field = sol.field()
    cert = equality_certificate(field, chain_config(rc))
    extra = {
        "profile": g.describe(),
        "validation": report.to_dict(),
        "minimal_bound": {"worst_margin": margin, "at_t": t_at,
                          "holds": bool(margin >= -rc.tolerances.tau_ineq)},
    }
    files = _certificate_files(rc, cert, "gen-solution", extra)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "g", "h", "h_prime"])
    for row in sol.export_rows():
        w.writerow([repr(float(v)) for v in row])
    files["solution.csv"] = buf.getvalue()
    _write_all(rc.out, files)
    write_grid_csv(Path(rc.out) / "field_grid.csv", field, min(rc.resolution, 256))
    print(f"gen-solution {args.g}: shift={g.shift:.10g} h(1)={float(sol.h(1.0)):.3g} "
          f"min[h - (1 - t)]={margin:.6g} at t={t_at:.4g}")
    _print_certificate(f"g:{args.g}", cert)
    return _VERDICT_EXIT[cert.overall]


def _parse_start(text):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise SpecError(f"--start must be 'x,y', got {text!r}") from exc
    return np.array([x, y])


def cmd_flow(args) -> int:
    from .flow import decay_envelope_check, level_length_function, straightness_residual, trace_normal_flow
    field = resolve_field(args.field)
    rc = run_config(args, args.field)
    start = _parse_start(args.start)
    trace = trace_normal_flow(field, start, args.dir)
    diag = {"termination": trace.termination, "samples": len(trace), "length": trace.length,
            "start": start.tolist(), "end": trace.end.tolist(), "direction": args.dir,
            "h_step": trace.h_step}
    try:
        diag["straightness_residual"] = straightness_residual(trace)
    except HessdiscError as exc:
        diag["straightness_residual"] = None
        diag["straightness_error"] = str(exc)
    try:
        length = level_length_function(field, resolution=min(rc.resolution, 256))
        diag["envelope"] = decay_envelope_check(trace, length, rc.tolerances.tau_env).to_dict()
    except (HessdiscError, ValueError) as exc:
        diag["envelope"] = None
        diag["envelope_error"] = str(exc)
    files = {"trace.csv": _csv_text(["t", "x", "y", "f", "grad_norm"], trace.rows())}
    if rc.format in ("json", "both"):
        files["flow.json"] = _dumps(_envelope("flow", rc, {"flow": diag}))
    if rc.format in ("csv", "both"):
        files["flow_summary.csv"] = _csv_text(["key", "value"], [
            (k, v) for k, v in sorted(diag.items()) if isinstance(v, (int, float, str))])
    _write_all(rc.out, files)
    sr = diag["straightness_residual"]
    print(f"flow {args.field} from {args.start} {args.dir}: {trace.termination} at "
          f"({trace.end[0]:.6g}, {trace.end[1]:.6g}), t={trace.length:.6g}, "
          f"straightness={'n/a' if sr is None else format(sr, '.3g')}")
    return EXIT_OK


COMMANDS = {"verify": cmd_verify, "certify": cmd_certify, "gen-solution": cmd_gen_solution, "flow": cmd_flow}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except HessdiscError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
