"""Command-line interface: ``anosovlab <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 numeric failure, 4 capacity exceeded.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AnosovError, CapacityError, InvalidInputError

log = logging.getLogger("anosovlab")


def _floats(text):
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text):
    return [int(x) for x in text.split(",") if x.strip()]


def _emit_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, default=_jsonable)
    if path and path != "-":
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON serialisable: {type(x)}")


def cmd_matrix(args):
    from .matrix_core import write_matrix
    from .pipeline import family_matrix

    m = family_matrix(args.family, args.N, args.s)
    if m.params.get("s_ignored"):
        log.warning("s=%d ignored: N=2 has no third row", args.s)
    if args.out:
        write_matrix(m, args.out)
    else:
        print(m.n)
        for row in m.entries:
            print(" ".join(map(str, row)))


def _check_dense_header(path):
    """Refuse oversized matrices before parsing the whole file."""
    from .spectrum import MAX_DENSE_DIM

    with open(path, encoding="utf-8") as fh:
        head = fh.readline().strip()
    if head.isdigit() and int(head) > MAX_DENSE_DIM:
        raise CapacityError(f"dimension {head} exceeds dense limit {MAX_DENSE_DIM}")


def cmd_spectrum(args):
    from .matrix_core import read_matrix
    from .spectrum import eigenvalues_mixmax_analytic, eigenvalues_numeric

    if args.analytic:
        N = args.N if args.N is not None else (read_matrix(args.inp).n if args.inp else None)
        if N is None:
            raise InvalidInputError("--analytic needs --N or --in")
        spec = eigenvalues_mixmax_analytic(N, args.convention)
    else:
        if not args.inp:
            raise InvalidInputError("--in is required for a numeric spectrum")
        _check_dense_header(args.inp)
        spec = eigenvalues_numeric(read_matrix(args.inp), args.tol)
    out = args.out or sys.stdout
    if out is sys.stdout:
        w = csv.writer(sys.stdout)
        w.writerow(["re", "im", "modulus", "phase", "class"])
        for lam, m, ph, c in zip(spec.eigenvalues, spec.moduli, spec.phases, spec.classes):
            w.writerow([repr(float(lam.real)), repr(float(lam.imag)), repr(float(m)), repr(float(ph)), c])
    else:
        spec.to_csv(out)


def cmd_entropy(args):
    from .entropy import entropy_report
    from .spectrum import Spectrum

    spec = Spectrum.from_csv(args.inp, args.source)
    methods = tuple(x.strip() for x in args.method.split(","))
    for m in methods:
        if m not in ("tuple", "split"):
            raise InvalidInputError(f"unknown method {m!r}")
    rep = entropy_report(spec, orders=args.orders, methods=methods, qs=args.q,
                         split_weight=args.split_weights)
    _emit_json(rep.to_dict(), args.json)


def cmd_asymptotics(args):
    from .asymptotics import entropy_integral_constant, predict, r2_integral_constant

    out = {}
    if args.constants or args.predict is None:
        h = entropy_integral_constant(max(args.tol, 1e-13))
        r2 = r2_integral_constant(max(args.tol, 1e-8))
        full = entropy_integral_constant(max(args.tol, 1e-13), -math.pi, math.pi)
        out["entropy_constant"] = vars(h)
        out["r2_constant"] = vars(r2)
        out["full_circle"] = vars(full)
    if args.predict is not None:
        hp, rp = predict(args.predict)
        out["predict"] = {"N": args.predict, "h": hp, "r2": rp}
    _emit_json(out, args.json)


def cmd_gen(args):
    from .generator import fill_residues, seed_state, to_unit, write_binary
    from .pipeline import family_matrix

    m = family_matrix(args.family, args.N, args.s)
    try:
        seed = bytes.fromhex(args.seed)
    except ValueError:
        raise InvalidInputError(f"seed must be hex, got {args.seed!r}") from None
    st = seed_state(m.n, seed)
    res, _ = fill_residues(st, args.count, m)
    if args.format == "u64-binary-le":
        if args.out:
            with open(args.out, "wb") as fh:
                write_binary(fh, res, m.n, args.s)
        else:
            write_binary(sys.stdout.buffer, res, m.n, args.s)
        return
    u = to_unit(res)
    fh = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        np.savetxt(fh, u, fmt="%.17g")
    finally:
        if args.out:
            fh.close()


def cmd_stats(args):
    from .pipeline import tomllib
    from .stats import BatteryConfig, GeneratorConfig, compare_generators

    cfg = tomllib.loads(Path(args.config).read_text(encoding="utf-8"))
    gens = [GeneratorConfig(**g) for g in cfg.get("generators", [])]
    bat = cfg.get("battery", {})
    for key in ("lags", "discrepancy_dims", "discrepancy_budgets"):
        if key in bat:
            bat[key] = tuple(bat[key])
    rows = compare_generators(gens, BatteryConfig(**bat))
    _emit_json({"config": cfg, "rows": rows}, args.out)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["generator", "N", "h", "r2_tuple", "r2_split", "tests_passed", "tests_run"])
            for r in rows:
                w.writerow([r["generator"], r["N"], r["h"], r["r2_tuple"], r["r2_split"],
                            r["tests_passed"], r["tests_run"]])


def cmd_curvature(args):
    from .geodesic import SuspensionPoint, curvature_report

    rep = curvature_report(SuspensionPoint(u=args.u), args.method, args.h, args.chart)
    d = rep.to_dict()
    if args.json is None:
        for k in ("K12", "K13", "K23", "R"):
            print(f"{k} {d[k]!r}")
    else:
        _emit_json(d, args.json)


def cmd_geodesic(args):
    from .geodesic import SuspensionPoint, integrate_geodesic

    w = _floats(args.start)
    if len(w) != 3:
        raise InvalidInputError("--start needs w1,w2,u")
    v = _floats(args.v)
    traj = integrate_geodesic(SuspensionPoint(*w), v, args.t, args.dt)
    fh = open(args.csv, "w", newline="", encoding="utf-8") if args.csv else sys.stdout
    try:
        wr = csv.writer(fh)
        wr.writerow(["t", "w1", "w2", "u", "dw1", "dw2", "du"])
        stride = max(1, args.every)
        for i in range(0, len(traj.t), stride):
            wr.writerow([repr(float(traj.t[i]))] + [repr(float(x)) for x in traj.x[i]]
                        + [repr(float(x)) for x in traj.v[i]])
    finally:
        if args.csv:
            fh.close()
    log.info("energy drift %.3g", traj.energy_drift)


def cmd_table(args):
    from .pipeline import cmd_table as table

    rows = []
    for tok in args.rows.split(","):
        N, _, s = tok.partition(":")
        rows.append((int(N), int(s or 0)))
    out = table(rows, args.split_weights)
    cols = list(out[0].keys())
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=cols)
        w.writeheader()
        w.writerows(out)
    finally:
        if args.out:
            fh.close()
    if args.json:
        _emit_json(out, args.json)


def cmd_bundle(args):
    from .pipeline import RunConfig, cmd_report_bundle, validate_bundle

    overrides = dict(family=args.family, N=args.N, s=args.s, seed=args.seed, samples=args.samples)
    cfg = RunConfig.load(args.config, **overrides) if args.config else \
        RunConfig.from_dict({k: v for k, v in overrides.items() if v is not None})
    out = args.out or cfg.out
    b = cmd_report_bundle(cfg, out)
    validate_bundle(b)
    print(f"{out}/bundle.json {b['content_hash']}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="anosovlab", description=__doc__.splitlines()[0],
                                allow_abbrev=False)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("matrix", help="write an evolution matrix")
    q.add_argument("--family", choices=["mixmax", "cat", "rcarry"], default="mixmax")
    q.add_argument("--N", type=int, default=256)
    q.add_argument("--s", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_matrix)

    q = sub.add_parser("spectrum", help="eigenvalues to CSV")
    q.add_argument("--in", dest="inp")
    q.add_argument("--out")
    q.add_argument("--analytic", action="store_true")
    q.add_argument("--N", type=int)
    q.add_argument("--convention", default=None)
    q.add_argument("--tol", type=float, default=1e-6)
    q.set_defaults(func=cmd_spectrum)

    q = sub.add_parser("entropy", help="entropy report from a spectrum CSV")
    q.add_argument("--in", dest="inp", required=True)
    q.add_argument("--orders", type=_ints, default=[2])
    q.add_argument("--method", default="tuple,split")
    q.add_argument("--q", type=_floats, default=[])
    q.add_argument("--source", choices=["numeric", "analytic"], default="numeric")
    q.add_argument("--split-weights", choices=["modulus", "curve"], default="modulus")
    q.add_argument("--json", nargs="?", const="-", default="-")
    q.set_defaults(func=cmd_entropy)

    q = sub.add_parser("asymptotics", help="integral constants and large-N predictions")
    q.add_argument("--constants", action="store_true")
    q.add_argument("--predict", type=float)
    q.add_argument("--tol", type=float, default=1e-10)
    q.add_argument("--json", nargs="?", const="-", default="-")
    q.set_defaults(func=cmd_asymptotics)

    q = sub.add_parser("gen", help="generate samples")
    q.add_argument("--family", choices=["mixmax", "cat", "rcarry"], default="mixmax")
    q.add_argument("--N", type=int, default=256)
    q.add_argument("--s", type=int, default=-1)
    q.add_argument("--seed", default="01")
    q.add_argument("--count", type=int, default=1000)
    q.add_argument("--format", choices=["f64-text", "u64-binary-le"], default="f64-text")
    q.add_argument("--out")
    q.set_defaults(func=cmd_gen)

    q = sub.add_parser("stats", help="run the statistical battery from a TOML config")
    q.add_argument("--config", required=True)
    q.add_argument("--out", default="-")
    q.add_argument("--csv")
    q.set_defaults(func=cmd_stats)

    q = sub.add_parser("curvature", help="sectional and scalar curvature")
    q.add_argument("--u", type=float, default=0.0)
    q.add_argument("--method", choices=["analytic", "fd", "finite-difference"], default="analytic")
    q.add_argument("--h", type=float, default=1e-4)
    q.add_argument("--chart", choices=["eigen", "w"], default="eigen")
    q.add_argument("--json", nargs="?", const="-", default=None)
    q.set_defaults(func=cmd_curvature)

    q = sub.add_parser("geodesic", help="integrate a geodesic")
    q.add_argument("--start", default="0,0,0", help="w1,w2,u")
    q.add_argument("--v", default="0,0,1")
    q.add_argument("--t", type=float, default=5.0)
    q.add_argument("--dt", type=float, default=1e-3)
    q.add_argument("--every", type=int, default=1, help="write every k-th point")
    q.add_argument("--csv")
    q.set_defaults(func=cmd_geodesic)

    q = sub.add_parser("table", help="entropy table rows over several (N, s)")
    q.add_argument("--rows", default="256:-1,7307:0,20693:0")
    q.add_argument("--split-weights", choices=["modulus", "curve"], default="modulus")
    q.add_argument("--out")
    q.add_argument("--json")
    q.set_defaults(func=cmd_table)

    q = sub.add_parser("bundle", help="run the full pipeline into a report bundle")
    q.add_argument("--config")
    q.add_argument("--family", choices=["mixmax", "cat", "rcarry"])
    q.add_argument("--N", type=int)
    q.add_argument("--s", type=int)
    q.add_argument("--seed")
    q.add_argument("--samples", type=int)
    q.add_argument("--out")
    q.set_defaults(func=cmd_bundle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        args.func(args)
    except AnosovError as exc:
        print(f"anosovlab: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"anosovlab: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
