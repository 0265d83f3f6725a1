"""Command-line front end.

Instances are JSON files ``{"dim", "index", "S", "G", "tolerances"?}``.
Exit codes: 0 success, 1 input error, 2 verification failure, 3 internal
assertion failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .covering import (CoverReport, IsotropicHyperplane, cover_sigma0, cover_sigma0_lines,
                       cover_sigma1, verify_coverage)
from .errors import InputError
from .monotone import MonotoneSet, project, random_isotropic_chain, random_monotone
from .pseudo_space import ScalarProduct, inertia
from .singularity import SingularPoint, candidate_singular_points

EXIT_OK, EXIT_INPUT, EXIT_VERIFY, EXIT_INTERNAL = 0, 1, 2, 3
OUT_ENV = "SSPACE_OUT"
DEFAULT_TOLERANCES = {"activity": 1e-9, "isotropy": 1e-9, "coverage": 1e-8}


@dataclass(frozen=True, eq=False)
class Instance:
    space: ScalarProduct
    set: MonotoneSet
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))


def fmt(v: float) -> str:
    return "%.17g" % v


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InputError(f"{where}: expected a number, got {v!r}")
    return float(v)


def _matrix(doc: dict, key: str, where: str) -> np.ndarray:
    rows = doc.get(key)
    if not isinstance(rows, list) or not rows:
        raise InputError(f"{where}: field '{key}' must be a nonempty list of rows")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise InputError(f"{where}: {key}[{i}] must be a list")
        out.append([_number(v, f"{where}: {key}[{i}][{k}]") for k, v in enumerate(row)])
    if len({len(r) for r in out}) != 1:
        raise InputError(f"{where}: rows of '{key}' differ in length")
    return np.array(out)


def parse_instance(text: str, where: str = "<instance>") -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{where}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{where}: top level must be an object")
    for key in ("dim", "index", "S", "G"):
        if key not in doc:
            raise InputError(f"{where}: missing field '{key}'")
    dim, index = doc["dim"], doc["index"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError(f"{where}: field 'dim' must be a positive integer")
    if not isinstance(index, int) or isinstance(index, bool):
        raise InputError(f"{where}: field 'index' must be an integer")
    S = _matrix(doc, "S", where)
    G = _matrix(doc, "G", where)
    if S.shape != (dim, dim):
        raise InputError(f"{where}: 'S' must be {dim}x{dim}, got {S.shape[0]}x{S.shape[1]}")
    if G.shape[1] != dim:
        raise InputError(f"{where}: points in 'G' must have length {dim}")
    tol = dict(DEFAULT_TOLERANCES)
    given = doc.get("tolerances", {})
    if not isinstance(given, dict):
        raise InputError(f"{where}: 'tolerances' must be an object")
    for key, v in given.items():
        if key not in tol:
            raise InputError(f"{where}: unknown tolerance '{key}'")
        tol[key] = _number(v, f"{where}: tolerances.{key}")
        if not tol[key] > 0:
            raise InputError(f"{where}: tolerances.{key} must be positive")
    space = ScalarProduct.from_matrix(S, index)
    return Instance(space, MonotoneSet.build(space, G, tol["isotropy"]), tol)


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_instance(text, str(path))


def _rows(M: np.ndarray) -> str:
    return ",\n".join("    [" + ", ".join(fmt(v) for v in row) + "]" for row in M)


def dumps_instance(inst: Instance) -> str:
    tol = ",\n".join(f'    "{k}": {fmt(inst.tolerances[k])}' for k in DEFAULT_TOLERANCES)
    return (
        "{\n"
        f'  "dim": {inst.space.dim},\n'
        f'  "index": {inst.space.index},\n'
        f'  "S": [\n{_rows(inst.space.matrix)}\n  ],\n'
        f'  "G": [\n{_rows(inst.set.points)}\n  ],\n'
        f'  "tolerances": {{\n{tol}\n  }}\n'
        "}\n"
    )


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


# ---------------------------------------------------------------- emission

def points_csv(points: list[SingularPoint], dim: int) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"x{i + 1}" for i in range(dim)] + ["order", "j_indices", "witnesses"])
    for n, p in enumerate(points):
        wit = ";".join(f"{x.i}-{x.k}:{x.kind}" for x in p.witnesses)
        w.writerow([n] + [fmt(v) for v in p.location] + [p.order, ";".join(map(str, sorted(p.j_indices))), wit])
    return buf.getvalue()


def surfaces_csv(families: list[tuple[str, int, list]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["surface_id", "family", "j", "component", "index", "values", "intercept", "precompose"])
    sid = 0
    for family, j, surfaces in families:
        for s in surfaces:
            if isinstance(s, IsotropicHyperplane):
                w.writerow([sid, family, j, "anchor", s.pair[1], ";".join(map(fmt, s.anchor)), "", 0])
                w.writerow([sid, family, j, "direction", s.pair[0], ";".join(map(fmt, s.direction)), "", 0])
            else:
                pre = int(s.precompose is not None)
                for name, g in (("g1", s.g1), ("g2", s.g2)):
                    for k in range(g.n_pieces):
                        w.writerow([sid, family, j, name, k, ";".join(map(fmt, g.slopes[k])),
                                    fmt(g.intercepts[k]), pre])
                for k, v in enumerate(s.normal_set):
                    w.writerow([sid, family, j, "normal", k, ";".join(map(fmt, v)), "", pre])
            sid += 1
    return buf.getvalue()


def _report_dict(r: CoverReport) -> dict:
    return {
        "total_points": r.total_points,
        "covered": r.covered,
        "max_residual": r.max_residual if np.isfinite(r.max_residual) else None,
        "normal_failures": r.normal_failures,
        "gradient_checks": r.gradient_checks,
    }


# ---------------------------------------------------------------- pipeline

def _families(inst: Instance, js: list[int], order: str, delta: float, epsilon: float,
              cluster_radius: float | None):
    iso = inst.tolerances["isotropy"]
    G = inst.set
    out = []
    for j in js:
        if order in ("1", "all"):
            out.append(("sigma1", j, cover_sigma1(G, j, epsilon, cluster_radius, iso),
                        lambda p, j=j: p.in_sigma1(j)))
        if order in ("0", "all"):
            out.append(("sigma0", j, cover_sigma0(G, j, delta, epsilon, cluster_radius, iso),
                        lambda p, j=j: p.in_sigma0_closure(j)))
            if inst.space.index == 1:
                out.append(("isotropic_line", j, cover_sigma0_lines(G, j, iso),
                            lambda p, j=j: p.in_sigma0_closure(j)))
    return out


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or "sspace-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _js(args, inst: Instance) -> list[int]:
    if args.j is None:
        return list(range(1, inst.space.dim + 1))
    if not 1 <= args.j <= inst.space.dim:
        raise InputError(f"--j must lie in 1..{inst.space.dim}")
    return [args.j]


def _detect(args, inst: Instance) -> list[SingularPoint]:
    if args.samples < 1:
        raise InputError("--samples must be at least 1")
    if args.radius < 0:
        raise InputError("--radius must be nonnegative")
    return candidate_singular_points(inst.set, args.samples, args.radius, args.seed,
                                     inst.tolerances["activity"], inst.tolerances["isotropy"])


def _cover_opts(args):
    if not args.delta > 0:
        raise InputError("--delta must be positive")
    if not args.epsilon > 0:
        raise InputError("--epsilon must be positive")
    return args.delta, args.epsilon, args.cluster_radius


def run_pipeline(inst: Instance | None, command: str, args) -> int:
    """Run ``command`` and return the exit code."""
    if command == "gen":
        return _gen(args)
    if command == "check":
        print(f"ok: {len(inst.set)} points, monotone under a form of dimension "
              f"{inst.space.dim} and index {inst.space.index}")
        return EXIT_OK
    if command == "inertia":
        dec = inertia(inst.space)
        print(json.dumps({"V": dec.V.tolist(), "signs": dec.lambda_signs.tolist()}))
        return EXIT_OK
    if command == "project":
        if args.x is None or len(args.x) != inst.space.dim:
            raise InputError(f"--x needs {inst.space.dim} coordinates")
        res = project(inst.set, np.array(args.x), inst.tolerances["activity"])
        print(json.dumps({"indices": list(res.indices), "minimizers": res.minimizers.tolist(),
                          "value": res.value}))
        return EXIT_OK

    if command == "classify":
        points = _detect(args, inst)
        out = _out_dir(args)
        (out / "points.csv").write_text(points_csv(points, inst.space.dim))
        print(f"{len(points)} singular points -> {out / 'points.csv'}")
        return EXIT_OK

    js = _js(args, inst)
    delta, epsilon, cluster_radius = _cover_opts(args)
    fams = _families(inst, js, args.order, delta, epsilon, cluster_radius)
    out = _out_dir(args)
    (out / "surfaces.csv").write_text(surfaces_csv([(f, j, s) for f, j, s, _ in fams]))
    if command == "cover":
        print(f"{sum(len(s) for _, _, s, _ in fams)} surfaces -> {out / 'surfaces.csv'}")
        return EXIT_OK

    # verify
    points = _detect(args, inst)
    (out / "points.csv").write_text(points_csv(points, inst.space.dim))
    parts = []
    ok = True
    total = CoverReport(0, 0, 0.0, 0, 0)
    for family, j, surfaces, keep in fams:
        rep = verify_coverage(surfaces, points, keep, inst.tolerances["coverage"],
                              space=inst.space, isotropy_tol=inst.tolerances["isotropy"])
        ok &= rep.covered == rep.total_points and rep.normal_failures == 0
        parts.append({"family": family, "j": j, "surfaces": len(surfaces), **_report_dict(rep)})
        total = CoverReport(total.total_points + rep.total_points, total.covered + rep.covered,
                            max(total.max_residual, rep.max_residual),
                            total.normal_failures + rep.normal_failures,
                            total.gradient_checks + rep.gradient_checks)
    report = {**_report_dict(total), "passed": bool(ok), "families": parts}
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    print(f"covered {total.covered}/{total.total_points}, max residual {total.max_residual:.3g}, "
          f"normal failures {total.normal_failures} -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERIFY


def _gen(args) -> int:
    if args.dim < 1 or not 0 <= args.index <= args.dim:
        raise InputError("need dim >= 1 and 0 <= index <= dim")
    if args.n < 1:
        raise InputError("--n must be at least 1")
    rng = np.random.default_rng(args.seed)
    if args.matrix == "canonical":
        space = ScalarProduct.canonical(args.dim, args.index)
    elif args.matrix == "standard":
        if args.dim % 2 or args.index != args.dim // 2:
            raise InputError("the standard form needs an even dim and index = dim / 2")
        space = ScalarProduct.standard(args.dim // 2)
    else:
        Q, _ = np.linalg.qr(rng.normal(size=(args.dim, args.dim)))
        mags = rng.uniform(0.5, 2.0, size=args.dim)
        signs = np.array([1.0] * args.index + [-1.0] * (args.dim - args.index))
        space = ScalarProduct.from_matrix(Q @ np.diag(signs * mags) @ Q.T, args.index)
    if args.form == "chain":
        G = random_isotropic_chain(space, args.n, args.seed)
    else:
        G = random_monotone(space, args.n, args.seed)
    text = dumps_instance(Instance(space, G))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sspace", description=(
        "Fitzpatrick functions, projection singularities and c-c surface coverings "
        "for finite monotone sets in pseudo-Euclidean spaces."))
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def instance_cmd(name, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("instance", help="instance JSON file")
        sp.add_argument("--tol-activity", type=float, help="projection/activity tie tolerance")
        sp.add_argument("--tol-isotropy", type=float, help="isotropy tolerance")
        sp.add_argument("--tol-coverage", type=float, help="coverage residual tolerance")
        return sp

    def detection(sp):
        sp.add_argument("--samples", type=int, default=8, help="samples per tie hyperplane (default 8)")
        sp.add_argument("--radius", type=float, default=2.0, help="sampling radius (default 2.0)")
        sp.add_argument("--seed", type=int, default=0, help="sampling seed (default 0)")

    def covering(sp):
        sp.add_argument("--j", type=int, help="coordinate 1..dim (default: all)")
        sp.add_argument("--order", choices=["0", "1", "all"], default="all", help="singularity order (default all)")
        sp.add_argument("--epsilon", type=float, default=float("inf"),
                        help="bound on diam theta(C) for clustered compacts (default inf)")
        sp.add_argument("--delta", type=float, default=0.1, help="bound on S(w, w) for order-0 normals (default 0.1)")
        sp.add_argument("--cluster-radius", type=float, default=None,
                        help="group points into balls of this radius to build multi-point compacts")

    def out(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./sspace-out)")

    instance_cmd("check", "validate an instance")
    instance_cmd("inertia", "print the inertia factorization S = V^T Lambda V")
    sp = instance_cmd("project", "project a point onto the monotone set")
    sp.add_argument("--x", type=float, nargs="+", help="point coordinates")
    sp = instance_cmd("classify", "detect singular points and write points.csv")
    detection(sp)
    out(sp)
    sp = instance_cmd("cover", "build covering surfaces and write surfaces.csv")
    covering(sp)
    out(sp)
    sp = instance_cmd("verify", "detect, cover and verify; writes points.csv, surfaces.csv, report.json")
    detection(sp)
    covering(sp)
    out(sp)

    sp = sub.add_parser("gen", help="generate a random monotone instance")
    sp.add_argument("--dim", type=int, required=True)
    sp.add_argument("--index", type=int, required=True)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--matrix", choices=["canonical", "standard", "random"], default="canonical")
    sp.add_argument("--form", choices=["random", "chain"], default="random",
                    help="strictly monotone sample or a chain with isotropic segments")
    sp.add_argument("--out", help="output file (default stdout)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        inst = None
        if args.command != "gen":
            inst = load_instance(args.instance)
            overrides = {"activity": args.tol_activity, "isotropy": args.tol_isotropy,
                         "coverage": args.tol_coverage}
            for key, v in overrides.items():
                if v is not None:
                    if not v > 0:
                        raise InputError(f"--tol-{key} must be positive")
                    inst.tolerances[key] = v
        return run_pipeline(inst, args.command, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AssertionError as exc:
        print(f"internal assertion failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
