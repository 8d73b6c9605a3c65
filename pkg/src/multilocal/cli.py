"""Command-line front end: scene file in, result JSON, trajectories and SVG plots out.

Exit status is 0 on success, 1 on bad input and 2 when planning fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from .errors import PipelineFailure, SceneError
from .pipeline import PipelineResult, find_path
from .plot import plot_svg
from .scenefile import _trajectory_doc, load_scene, result_document, write_json

log = logging.getLogger("multilocal")

EXIT_OK, EXIT_INPUT, EXIT_FAILURE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="multilocal",
        description="Plan a mobile-manipulator motion along a fixed end-effector path by "
                    "optimizing one seed per homotopy class and keeping the cheapest.")
    p.add_argument("--scene", required=True, help="scene JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n", type=int, help="number of classes to evaluate (overrides the scene)")
    p.add_argument("--variant", choices=("modified", "generalized"),
                   help="class-search variant (overrides the scene)")
    p.add_argument("--dump-graph", action="store_true", help="write graph.txt")
    p.add_argument("--dump-nag", action="store_true", help="write nag.txt")
    p.add_argument("--seed-only", action="store_true", help="emit the guesses without solving")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return p


def _write_outputs(result: PipelineResult, scene, out_dir, args):
    doc = result_document(result, scene.world.anchors())
    write_json(doc, os.path.join(out_dir, "result.json"))
    # wall-clock numbers live apart from the reproducible result document
    write_json(result.timings, os.path.join(out_dir, "timing.json"))
    for i, o in enumerate(result.outcomes):
        write_json(_trajectory_doc(o.trajectory), os.path.join(out_dir, f"trajectory_{i}.json"))
    if result.guesses:
        plot_svg(result, scene.world, out_dir, ee=scene.path.points)
    if args.dump_graph and result.graph is not None:
        with open(os.path.join(out_dir, "graph.txt"), "w", encoding="utf-8") as fh:
            result.graph.dump(fh)
    if args.dump_nag and result.nag is not None:
        with open(os.path.join(out_dir, "nag.txt"), "w", encoding="utf-8") as fh:
            result.nag.dump(fh)


def _warn(kind, message):
    sys.stderr.write(json.dumps({"level": "warning", "kind": kind, "message": message}) + "\n")


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scene = load_scene(args.scene)
        cfg = scene.config
        if args.n is not None:
            cfg = replace(cfg, n=args.n)
        if args.variant is not None:
            cfg = replace(cfg, nags_cfg=replace(cfg.nags_cfg, variant=args.variant))
        os.makedirs(args.out, exist_ok=True)
    except (SceneError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT

    status = EXIT_OK
    try:
        result = find_path(scene.world, scene.robot, scene.path, cfg, guesses_only=args.seed_only)
    except PipelineFailure as exc:
        sys.stderr.write(f"planning failed: {exc.reason}\n")
        result, status = exc.result, EXIT_FAILURE
    if result is not None:
        for w in result.warnings:
            _warn("solve" if w.startswith("guess") else "classes", w)
        _write_outputs(result, scene, args.out, args)
    return status


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
