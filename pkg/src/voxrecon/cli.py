"""Command-line driver: ``voxrecon <subcommand> ...``.

Failures exit with status 1 (2 for usage errors) and print one line,
``error: <message>``, on stderr.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import io
from .baselines import carve
from .barrier import BarrierConfig
from .datasets import gen_data, load_pool, parse_view_list
from .experiments import compare_projectors
from .metrics import average_precision, export_colored, iou
from .projection import gs_forward, rp_forward
from .solver import SolverConfig, estimate_viewpoint, reconstruct, reconstruct_unconstrained
from .theory import JointDist, verify_global_min
from .voxel import SHAPE_KINDS


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _int_list(text):
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def cmd_gen_data(a):
    shape, views = gen_data(a.shape, a.n, a.views, a.out, seed=a.seed, image_size=a.image_size)
    print(f"wrote shape={a.shape} n={a.n} views={len(views)} occupied={shape.count()} out={a.out}")


def cmd_project(a):
    grid = io.read_voxels(a.voxels)
    cam = io.read_camera(a.camera)
    if a.method == "rp":
        mask = rp_forward(grid, cam)
    else:
        mask = gs_forward(grid, cam, a.depth_samples)
    io.write_mask(a.out, mask)
    print(f"wrote {a.out} nonzero={int(np.count_nonzero(mask.values))}")


def cmd_carve(a):
    views = parse_view_list(a.views)
    hull = carve(a.n, views, (a.lo, a.hi))
    io.write_voxels(a.out, hull)
    print(f"wrote {a.out} occupied={hull.count()}")


def cmd_reconstruct(a):
    views = parse_view_list(a.views)
    pool = load_pool(a.pool) if a.pool else []
    n = a.n or (pool[0].n if pool else 32)
    cfg = SolverConfig(iterations=a.iters, n=n, seed=a.seed, lr_f=a.lr)
    if a.no_barrier:
        result = reconstruct_unconstrained(views, cfg)
    else:
        if not pool:
            raise ValueError("--pool is required unless --no-barrier is given")
        bcfg = BarrierConfig(t=a.t, sigma_noise=a.sigma_noise, anneal_noise=not a.constant_noise)
        result = reconstruct(views, pool, cfg, bcfg)
    io.write_voxels(a.out, result.grid)
    if a.log:
        io.write_log(a.log, result.log)
    print(f"wrote {a.out} iterations={a.iters}")


def cmd_compare(a):
    grid = io.read_voxels(a.voxels)
    cam = io.read_camera(a.camera)
    lines = [r.line() for r in compare_projectors(grid, cam, a.samples)]
    text = "\n".join(lines) + "\n"
    if a.report:
        with open(a.report, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def cmd_theory(a):
    rng = np.random.default_rng(a.seed)
    p = JointDist.random(rng, a.categories, a.outcomes)
    report = verify_global_min(p, a.trials, rng=rng, match_prob=0.05)
    print("\n".join(report.lines()))
    if not report.passed:
        raise AssertionError(f"{len(report.violations)} trials violate the lower bound")


def cmd_eval(a):
    pred, gt = io.read_voxels(a.pred), io.read_voxels(a.gt)
    if pred.n != gt.n:
        raise ValueError(f"--pred has resolution {pred.n} but --gt has {gt.n}")
    print(f"iou={iou(pred, gt, a.tau):.6f} ap={average_precision(pred, gt):.6f}")


def cmd_estimate(a):
    mask = io.read_mask(a.mask)
    ref = io.read_voxels(a.reference)
    cam, (i, j, k), score = estimate_viewpoint(mask, ref, a.bins)
    if a.out:
        io.write_camera(a.out, cam)
    print(f"bins={i},{j},{k} score={score:.6f} center={','.join(f'{c:.6f}' for c in cam.center)}")


def cmd_export(a):
    rows, _ = export_colored(io.read_voxels(a.voxels))
    io.write_point_cloud(a.out, rows)
    print(f"wrote {a.out} points={len(rows)}")


def build_parser():
    p = _Parser(prog="voxrecon", description="Silhouette-based voxel reconstruction tools")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("gen-data", help="render a procedural shape on a camera ring")
    s.add_argument("--shape", choices=SHAPE_KINDS, required=True)
    s.add_argument("--n", type=int, default=32)
    s.add_argument("--views", type=int, default=24)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--image-size", type=int, default=32)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("project", help="render a voxel file into a mask")
    s.add_argument("--voxels", required=True)
    s.add_argument("--camera", required=True)
    s.add_argument("--method", choices=("rp", "gs"), default="rp")
    s.add_argument("--depth-samples", type=int, default=16)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_project)

    s = sub.add_parser("carve", help="visual hull from camera:mask pairs")
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--views", required=True)
    s.add_argument("--lo", type=float, default=-0.5)
    s.add_argument("--hi", type=float, default=0.5)
    s.set_defaults(func=cmd_carve)

    s = sub.add_parser("reconstruct", help="optimize a grid against silhouettes")
    s.add_argument("--views", required=True)
    s.add_argument("--pool")
    s.add_argument("--iters", type=int, default=2000)
    s.add_argument("--t", type=float, default=100.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--n", type=int)
    s.add_argument("--lr", type=float, default=1e-2)
    s.add_argument("--sigma-noise", type=float, default=0.1)
    s.add_argument("--constant-noise", action="store_true")
    s.add_argument("--out", required=True)
    s.add_argument("--log")
    s.add_argument("--no-barrier", action="store_true")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("compare-projectors", help="grid sampling vs raytrace pooling")
    s.add_argument("--voxels", required=True)
    s.add_argument("--camera", required=True)
    s.add_argument("--samples", type=_int_list, default=[8, 16, 32, 64, 128])
    s.add_argument("--report")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("theory-check", help="randomized check of the global-minimum bound")
    s.add_argument("--categories", type=int, default=3)
    s.add_argument("--outcomes", type=int, default=8)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_theory)

    s = sub.add_parser("eval", help="IOU and AP of a prediction")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--tau", type=float, default=0.4)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("estimate-viewpoint", help="grid search for the camera of a silhouette")
    s.add_argument("--mask", required=True)
    s.add_argument("--reference", required=True)
    s.add_argument("--bins", type=int, default=10)
    s.add_argument("--out")
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("export-points", help="colored point cloud of a voxel file")
    s.add_argument("--voxels", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except (OSError, ValueError, AssertionError, FloatingPointError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {args.command}: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
