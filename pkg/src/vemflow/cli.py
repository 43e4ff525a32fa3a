"""Command line entry points: mesh generation and convergence studies."""

from __future__ import annotations

import argparse
import csv
import math
import sys

from .mesh import MESH_FAMILIES, generate_mesh, save_mesh


def _mesh_cmd(args):
    mesh = generate_mesh(args.family, args.N, seed=args.seed)
    save_mesh(mesh, args.output)
    print(f"wrote {args.output}: {mesh.n_elements} elements, h = {mesh.h:.6g}")
    return 0


def _study_cmd(args):
    from .solver import PicardDivergenceError, SolverError
    from .verify import build_case, run_study, write_csv

    if args.test == 3 and args.nu is None:
        print("error: --nu is required for test 3", file=sys.stderr)
        return 2
    case = build_case(args.test, nu=args.nu)
    Ns = [int(tok) for tok in args.N.split(",") if tok]

    def progress(row):
        print(
            f"{row.family} N={row.N}: iters={row.iters} "
            f"e_u={row.e_u_h1:.4e} e_T={row.e_T_h1:.4e} "
            f"e_p={row.e_p_l2:.4e} div={row.div_norm:.2e}"
        )

    try:
        rows = run_study(
            case, args.family, Ns,
            tol=args.tol, max_iter=args.max_iter, progress=progress,
        )
    except (PicardDivergenceError, SolverError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_csv(rows, args.output)
    print(f"wrote {args.output}")
    return 0


def _plotdata_cmd(args):
    with open(args.csv) as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    print("# family N log2_h log2_e_u log2_e_T log2_e_p")
    for row in rows:
        vals = [math.log2(float(row[c])) for c in ("h", "e_u_h1", "e_T_h1", "e_p_l2")]
        print(row["family"], row["N"], *(f"{v:.6f}" for v in vals))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vemflow",
        description="Polygonal-mesh flow/temperature solver and convergence studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_mesh = sub.add_parser("mesh", help="generate a mesh file")
    p_mesh.add_argument("--family", required=True, choices=MESH_FAMILIES)
    p_mesh.add_argument("--N", type=int, required=True)
    p_mesh.add_argument("--seed", type=int, default=None)
    p_mesh.add_argument("-o", "--output", required=True)
    p_mesh.set_defaults(func=_mesh_cmd)

    p_study = sub.add_parser("study", help="run a convergence study")
    p_study.add_argument("--test", type=int, required=True, choices=(1, 2, 3))
    p_study.add_argument("--nu", type=float, default=None)
    p_study.add_argument("--family", required=True, choices=MESH_FAMILIES)
    p_study.add_argument("--N", default="4,8,16")
    p_study.add_argument("--tol", type=float, default=1e-6)
    p_study.add_argument("--max-iter", type=int, default=100)
    p_study.add_argument("-o", "--output", required=True)
    p_study.set_defaults(func=_study_cmd)

    p_plot = sub.add_parser("plotdata", help="emit log2 h / log2 error pairs")
    p_plot.add_argument("csv")
    p_plot.set_defaults(func=_plotdata_cmd)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
