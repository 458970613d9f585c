"""Command-line interface: solve, mask, gradcheck, fit, eval.

Exit codes: 0 success, 1 usage error, 2 validation or parse error,
3 numerical failure (including a failed gradcheck).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .errors import NumericalError, ValidationError
from .fields_io import read_field, read_mask_image, write_field
from .fitting import (
    FitConfig,
    barycenter_from_mask,
    bce_score,
    dice_score,
    fit_potential,
    hausdorff_distance,
    iou_score,
    nearest_node,
    threshold_mask,
)
from .gradient import fd_gradient, random_smooth_potential, vjp
from .grid import PotentialField, ScalarField, SeedSet, make_grid
from .mask import soft_mask
from .solver import fast_march

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _seed_pair(text: str) -> tuple[int, int]:
    try:
        i_str, j_str = text.split(",")
        return int(i_str), int(j_str)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j integer pair, got {text!r}") from None


def _read_potential(path) -> PotentialField:
    field = read_field(path)
    return PotentialField(field.grid, field.values)


def _read_target(path) -> ScalarField:
    """Target mask file: FMFIELD with binary values, or a PGM image."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic in (b"P2", b"P5"):
        return read_mask_image(path)
    return read_field(path)


def cmd_solve(args) -> int:
    phi = _read_potential(args.phi)
    seeds = SeedSet.from_coords(phi.grid, args.seed)
    field = fast_march(phi.grid, phi, seeds)
    write_field(ScalarField(phi.grid, field.u), args.out)
    print(f"solved {phi.grid.nx}x{phi.grid.ny} grid, max distance {float(field.u.max())!r}")
    return EXIT_OK


def cmd_mask(args) -> int:
    phi = _read_potential(args.phi)
    seeds = SeedSet.from_coords(phi.grid, [args.seed])
    delta = args.delta if args.delta is not None else 1.0 / max(phi.grid.nx, phi.grid.ny)
    field = fast_march(phi.grid, phi, seeds)
    mask = soft_mask(field, delta)
    write_field(ScalarField(phi.grid, mask.values), args.out)
    print(f"mask written, delta={delta!r}, mean={float(mask.values.mean())!r}")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    grid = make_grid(args.nx, args.ny, args.h if args.h is not None else 1.0 / max(args.nx, args.ny))
    rng = np.random.default_rng(args.rng_seed)
    phi = random_smooth_potential(grid, rng)
    seeds = SeedSet((grid.index(grid.nx // 2, grid.ny // 2),))
    u_bar = ScalarField(grid, rng.standard_normal(grid.n))

    field = fast_march(grid, phi, seeds)
    adjoint = vjp(field, phi, u_bar)

    probes = rng.choice(grid.n, size=min(args.probes, grid.n), replace=False)
    fd = fd_gradient(
        grid,
        phi,
        seeds,
        loss=lambda f: float(np.dot(u_bar.values, f.u)),
        step=args.fd_step,
        pixels=probes,
    )

    ok = 0
    for p in probes:
        a = float(adjoint.g[p])
        d = float(fd.g[p])
        rel = abs(a - d) / max(abs(d), 1e-300)
        status = "ok" if rel <= args.tol else "FAIL"
        if rel <= args.tol:
            ok += 1
        print(f"probe p={p}: adjoint={a!r} fd={d!r} rel={rel:.3e} {status}")

    needed = 0.95 * len(probes)
    print(f"passed {ok}/{len(probes)} probes (tol {args.tol!r}, need >= {needed:.1f})")
    return EXIT_OK if ok >= needed else EXIT_NUMERICAL


def cmd_fit(args) -> int:
    target = _read_target(args.target)
    grid = target.grid
    seed = SeedSet.from_coords(grid, [args.seed]) if args.seed is not None else None
    cfg = FitConfig(
        lr=args.lr,
        delta=args.delta,
        lam=args.lam,
        max_iters=args.iters,
        rng_seed=args.rng_seed,
    )

    trace_fh = open(args.trace, "w") if args.trace else None
    if trace_fh:
        trace_fh.write("iter,loss,iou,gradnorm\n")

    def stream(it, loss, iou, gnorm):
        if trace_fh:
            trace_fh.write(f"{it},{loss!r},{iou!r},{gnorm!r}\n")
            trace_fh.flush()

    try:
        phi, trace = fit_potential(grid, target, seed=seed, cfg=cfg, on_iteration=stream)
    finally:
        if trace_fh:
            trace_fh.close()

    if args.out_phi:
        write_field(phi, args.out_phi)
    if args.out_mask:
        seeds_used = seed or SeedSet((nearest_node(grid, barycenter_from_mask(target)),))
        field = fast_march(grid, phi, seeds_used)
        write_field(ScalarField(grid, soft_mask(field, cfg.delta).values), args.out_mask)

    best = trace.best_index
    print(
        f"fit finished after {len(trace)} iterations: "
        f"best loss={trace.losses[best]!r} at iter {best}, final iou={trace.ious[-1]!r}"
    )
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = read_field(args.pred)
    target = read_field(args.target)
    hard_pred = threshold_mask(pred)
    print(f"dice={dice_score(hard_pred, target)!r}")
    print(f"iou={iou_score(hard_pred, target)!r}")
    print(f"bce={bce_score(pred, target)!r}")
    print(f"hausdorff={hausdorff_distance(hard_pred, target)!r}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="diffmarch", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="fast-march a potential field from seed points")
    p.add_argument("--phi", required=True, help="input potential (FMFIELD)")
    p.add_argument("--seed", required=True, type=_seed_pair, action="append", metavar="i,j")
    p.add_argument("--out", required=True, help="output distance field (FMFIELD)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("mask", help="distance map plus soft unit-ball mask")
    p.add_argument("--phi", required=True)
    p.add_argument("--seed", required=True, type=_seed_pair, metavar="i,j")
    p.add_argument("--delta", type=float, default=None, help="sharpness (default 1/max(nx,ny))")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("gradcheck", help="adjoint gradient vs central finite differences")
    p.add_argument("--nx", required=True, type=int)
    p.add_argument("--ny", required=True, type=int)
    p.add_argument("--h", type=float, default=None, help="spacing (default 1/max(nx,ny))")
    p.add_argument("--probes", type=int, default=20)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--fd-step", type=float, default=1e-5)
    p.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("fit", help="fit a potential so its geodesic ball matches a mask")
    p.add_argument("--target", required=True, help="target mask (PGM or binary FMFIELD)")
    p.add_argument("--seed", type=_seed_pair, default=None, metavar="i,j")
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="L1 mass bound")
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--out-phi", default=None)
    p.add_argument("--out-mask", default=None)
    p.add_argument("--trace", default=None, help="CSV trace: iter,loss,iou,gradnorm")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="overlap metrics between a prediction and a target")
    p.add_argument("--pred", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except ValidationError as exc:
        print(f"diffmarch: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"diffmarch: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"diffmarch: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
