"""Command-line interface: one-shot solves, mesh export, cell constants,
and configuration-driven studies.

Exit codes: 0 on success, 1 when a gate or validation fails, 2 on usage
errors (argparse's convention).
"""

from __future__ import annotations

import argparse
import json
import sys

from . import cellmetrics, geometry, meshgen, spectra, study


def _template_from_args(args) -> meshgen.CellMeshTemplate:
    return meshgen.CellMeshTemplate(
        ring_count=args.rings, grading=args.grading,
        boundary_nodes_per_side=args.sides,
        hole_boundary_segments=args.segments)


def _add_template_args(p):
    p.add_argument("--rings", type=int, default=8)
    p.add_argument("--grading", type=float, default=2.0)
    p.add_argument("--sides", type=int, default=8)
    p.add_argument("--segments", type=int, default=32)


def _domain(name: str):
    if name == "unit-square":
        return geometry.unit_square()
    if name == "l-shape":
        return geometry.l_shape()
    raise SystemExit(f"unknown domain {name!r}")


def _shape(spec: str):
    if spec == "circle":
        return "circle"
    if spec.startswith("kgon:"):
        return ("kgon", int(spec.split(":")[1]))
    raise SystemExit(f"unknown hole shape {spec!r}")


def cmd_validate(args) -> int:
    with open(args.geometry, "r", encoding="utf-8") as fh:
        geom = geometry.geometry_from_json(fh.read())
    report = geometry.validate_assumptions(geom)
    for c in report.checks:
        status = "pass" if c.passed else "FAIL"
        where = "" if c.worst_cell is None else f" (cell {c.worst_cell})"
        print(f"{status}  {c.name}: measured {c.measured:.6g} "
              f"vs bound {c.bound:.6g}{where}")
    print("PASS" if report.passed else "FAIL")
    return 0 if report.passed else 1


def cmd_mesh(args) -> int:
    geom = geometry.build_perforated_geometry(
        _domain(args.domain), args.m, args.beta, shape_spec=_shape(args.shape))
    mesh = meshgen.mesh_perforated(geom, _template_from_args(args))
    for _ in range(args.refine):
        mesh = meshgen.refine(mesh)
    print(f"nodes {mesh.num_nodes}  triangles {mesh.num_triangles}  "
          f"boundary edges {len(mesh.boundary_edges)}  "
          f"min angle {mesh.min_angle():.2f} deg  area {float(mesh.area())!r}")
    if args.export:
        with open(args.export, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(meshgen.export_mesh(mesh))
        print(f"wrote {args.export}")
    return 0


def cmd_solve(args) -> int:
    if args.homog:
        dom = _domain(args.domain)
        res = spectra.homogenized_spectrum(dom, args.q, args.h, args.k)
        print("weighted Dirichlet eigenvalues (lambda, mu):")
        for lam, mu in zip(res.values, res.mu):
            print(f"  {float(lam)!r}  {float(mu)!r}")
        return 0
    geom = geometry.build_perforated_geometry(
        _domain(args.domain), args.m, args.beta, shape_spec=_shape(args.shape))
    res = spectra.steklov_spectrum(geom, _template_from_args(args), args.k)
    print("boundary spectrum (mu, steklov lambda = 1/mu - 1):")
    for mu, lam in zip(res.values, res.steklov):
        print(f"  {float(mu)!r}  {float(lam)!r}")
    if res.warning:
        print(f"warning: {res.warning}")
    return 0


def cmd_cell(args) -> int:
    shape = args.shape
    if shape.startswith("kgon:"):
        shape = ("kgon", int(shape.split(":")[1]))
    elif shape.startswith("slit_collar:"):
        shape = ("slit_collar", float(shape.split(":")[1]))
    if args.lemma:
        rep = cellmetrics.verify_lemma(args.lemma)
        keys = sorted({k for row in rep.rows for k in row})
        print(",".join(keys))
        for row in rep.rows:
            print(",".join(repr(row.get(k, "")) for k in keys))
        slope = "" if rep.slope is None else f" slope {rep.slope:+.3f}"
        print(f"# {('PASS' if rep.passed else 'FAIL')}{slope} ({rep.method})")
        return 0 if rep.passed else 1
    consts = cellmetrics.cell_constants(shape, h=args.h)
    print(json.dumps(consts.as_dict(), indent=2))
    return 0


def cmd_oracle(args) -> int:
    if not args.selftest:
        print("nothing to do; use --selftest")
        return 2
    checks = study.oracle_selftest()
    for name, ok, detail in checks:
        print(f"{'pass' if ok else 'FAIL'}  {name}: {detail}")
    if all(ok for _, ok, _ in checks):
        print("PASS")
        return 0
    print("FAIL")
    return 1


def cmd_study(args) -> int:
    try:
        cfg = study.load_config(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except (study.StudyError, json.JSONDecodeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    report = study.run_study(cfg)
    out_dir = args.out or cfg.output_dir
    paths = study.write_report(report, out_dir)
    for name, ok, detail in report.oracle_checks:
        print(f"{'pass' if ok else 'FAIL'}  oracle/{name}")
    for p in report.pairs:
        print(f"m={p.m}: delta {p.delta:.5f}  hausdorff {p.hausdorff:.6f}  "
              f"gate {'ok' if p.gate_ok else 'FAIL'}")
    if report.rate is not None:
        print(f"rate fit: slope {report.rate.slope:.3f}  {report.rate.note}")
    for i, r in enumerate(report.gap_rates):
        print(f"gap rate f{i+1}: slope {r.slope:.3f}  {r.note}")
    for note in report.notes:
        print(f"note: {note}")
    print(f"wrote {', '.join(paths.values())}")
    print("PASS" if report.passed else "FAIL")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="steklov-lab",
        description="Spectra of finely perforated domains: geometry, "
                    "meshing, eigensolvers, and convergence studies.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a geometry JSON file against "
                                        "the uniform-geometry assumptions")
    p.add_argument("geometry")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("mesh", help="mesh a perforated domain")
    p.add_argument("--domain", default="unit-square")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--shape", default="circle")
    p.add_argument("--refine", type=int, default=0)
    p.add_argument("--export", help="write the plain-text mesh format here")
    _add_template_args(p)
    p.set_defaults(fn=cmd_mesh)

    p = sub.add_parser("solve", help="one-shot eigenvalue solves")
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--steklov", action="store_true")
    grp.add_argument("--homog", action="store_true")
    p.add_argument("--domain", default="unit-square")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--shape", default="circle")
    p.add_argument("--q", type=float, default=1.0,
                   help="constant weight for the homogenized problem")
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("-k", type=int, default=3)
    _add_template_args(p)
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("cell", help="single-cell constants and inequality "
                                    "sweeps")
    p.add_argument("--shape", default="disk",
                   help="disk | square | kgon:K | slit_collar:BETA")
    p.add_argument("--h", type=float, default=0.08)
    p.add_argument("--constants", action="store_true")
    p.add_argument("--lemma", help="inequality id, e.g. 3.2")
    p.set_defaults(fn=cmd_cell)

    p = sub.add_parser("oracle", help="independent reference self-tests")
    p.add_argument("--selftest", action="store_true")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("study", help="run a configuration-driven sweep")
    p.add_argument("config")
    p.add_argument("--out", help="output directory override")
    p.set_defaults(fn=cmd_study)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (geometry.GeometryError, meshgen.MeshError, study.StudyError,
            spectra.SpectraError, cellmetrics.CellMetricsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
