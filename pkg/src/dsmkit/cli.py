"""Command line interface.

Subcommands map to pipeline stages: scan, convert, mesh, variogram, lift,
run, compare. Options override config-file keys, which override built-in
defaults (the defaults reproduce the bundled Haut-Barr-sized synthetic demo).
Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .acquisition import convert_pointset, parse_point_file
from .errors import ConfigError, DataError, DsmError, NumericalError
from .interpolate import lift_mesh
from .mesh import TriMesh
from .pipeline import (
    PipelineConfig,
    compare_methods,
    config_from_sources,
    ensure_dir,
    export_mesh,
    run,
    write_point_file,
    write_variogram_csv,
    _acquire,
    _build_planar_mesh,
    _lift_config,
    _mesh_rect,
    _prepare_samples,
    _variogram_model,
)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="flat key=value config file")
    p.add_argument("--input", metavar="PATH", help="point file, or 'synthetic'")
    p.add_argument("--method", choices=["uk", "idw"], help="interpolation method")
    p.add_argument("--power", type=float, metavar="P", help="IDW power parameter")
    p.add_argument(
        "--variogram",
        choices=["spherical", "gaussian", "exponential"],
        help="theoretical variogram kind",
    )
    p.add_argument("--drift", type=int, choices=[0, 1], help="kriging drift degree")
    p.add_argument("--neighbors", metavar="N|global", help="neighborhood size")
    p.add_argument("--spacing", type=float, metavar="M", help="mesh vertex spacing, meters")
    p.add_argument("--smooth-iters", type=int, metavar="K", help="Laplacian sweeps")
    p.add_argument("--seed", type=int, metavar="S", help="RNG seed")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--format", metavar="LIST", help="comma list from obj,vtk,csv")


_OVERRIDE_KEYS = (
    ("input", "input"),
    ("method", "method"),
    ("power", "power"),
    ("variogram", "variogram"),
    ("drift", "drift"),
    ("neighbors", "neighbors"),
    ("spacing", "spacing"),
    ("smooth_iters", "smooth_iters"),
    ("seed", "seed"),
    ("out", "out"),
    ("format", "format"),
)


def _config_from_args(args) -> PipelineConfig:
    overrides = {}
    for attr, key in _OVERRIDE_KEYS:
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    return config_from_sources(args.config, overrides)


def _cmd_scan(args) -> int:
    config = _config_from_args(args)
    ps = _acquire(config)
    ensure_dir(config.out_dir)
    path = config.out_dir / "points.txt"
    write_point_file(path, ps, header="latitude longitude altitude (wgs84)")
    print(f"scanned {len(ps)} points -> {path}")
    return 0


def _cmd_convert(args) -> int:
    config = _config_from_args(args)
    if config.input == "synthetic":
        raise ConfigError("convert needs --input pointing at a point file")
    src = Path(config.input)
    if not src.exists():
        raise DataError(f"input file not found: {src}")
    ps = parse_point_file(src.read_text())
    utm = convert_pointset(ps, "utm")
    ensure_dir(config.out_dir)
    path = config.out_dir / "points_utm.txt"
    write_point_file(
        path, utm, header=f"easting northing altitude (utm zone={utm.crs.zone} "
        f"hemisphere={utm.crs.hemisphere})"
    )
    print(f"converted {len(utm)} points to zone {utm.crs.zone} -> {path}")
    return 0


def _cmd_mesh(args) -> int:
    config = _config_from_args(args)
    _, _, utm_ps = _prepare_samples(config)
    rect = _mesh_rect(config, utm_ps)
    planar, q_before, q_after = _build_planar_mesh(config, rect)
    ensure_dir(config.out_dir)
    path = config.out_dir / "planar_mesh.obj"
    flat = TriMesh(
        np.column_stack([planar.vertices, np.zeros(planar.n_vertices)]),
        planar.triangles,
        planar.boundary_flags,
    )
    export_mesh(flat, "obj", path)
    print(
        f"planar mesh: {planar.n_vertices} vertices, {planar.n_triangles} triangles -> {path}"
    )
    print(
        f"quality before/after smoothing: min angle "
        f"{q_before.min_angle:.2f} -> {q_after.min_angle:.2f} deg, "
        f"mean min angle {q_before.mean_min_angle:.2f} -> {q_after.mean_min_angle:.2f} deg"
    )
    return 0


def _cmd_variogram(args) -> int:
    config = _config_from_args(args)
    _, _, utm_ps = _prepare_samples(config)
    rect = _mesh_rect(config, utm_ps)
    model, ev = _variogram_model(config, utm_ps, rect)
    if ev is not None:
        ensure_dir(config.out_dir)
        path = config.out_dir / "variogram.csv"
        write_variogram_csv(path, ev)
        print(f"experimental variogram ({len(ev)} bins) -> {path}")
    print(
        f"{model.kind} model: nugget={model.nugget:.6g} partial_sill="
        f"{model.partial_sill:.6g} range={model.range_:.6g}"
    )
    return 0


def _cmd_lift(args) -> int:
    config = _config_from_args(args)
    _, _, utm_ps = _prepare_samples(config)
    rect = _mesh_rect(config, utm_ps)
    planar, _, _ = _build_planar_mesh(config, rect)
    model = None
    if config.method == "uk":
        model, _ = _variogram_model(config, utm_ps, rect)
    lifted, summary = lift_mesh(planar, utm_ps, _lift_config(config, model))
    ensure_dir(config.out_dir)
    written = []
    for fmt in ("obj", "vtk"):
        if fmt in config.formats:
            path = config.out_dir / f"dsm_{config.method}.{fmt}"
            export_mesh(lifted, fmt, path)
            written.append(str(path))
    print(
        f"lifted {lifted.n_vertices} vertices with {summary.method}: "
        f"z in [{summary.z_min:.3f}, {summary.z_max:.3f}] m"
    )
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    report = run(config)
    print(f"samples: {report.sample_count} acquired, {report.clipped_count} in region")
    print(
        f"mesh: {report.mesh_vertices} vertices, {report.mesh_edges} edges, "
        f"{report.mesh_triangles} triangles (utm zone {report.zone})"
    )
    print(
        f"smoothing: mean min angle {report.quality_before.mean_min_angle:.2f} -> "
        f"{report.quality_after.mean_min_angle:.2f} deg"
    )
    if report.variogram_model is not None:
        vm = report.variogram_model
        print(
            f"variogram: {vm.kind} nugget={vm.nugget:.6g} "
            f"partial_sill={vm.partial_sill:.6g} range={vm.range_:.6g}"
        )
    print(
        f"{report.method} lift: z in [{report.z_min:.3f}, {report.z_max:.3f}] m, "
        f"{report.fallback_count} fallbacks, {report.interpolation_seconds:.2f} s"
    )
    for path in report.artifacts:
        print(f"wrote {path}")
    return 0


def _cmd_compare(args) -> int:
    config = _config_from_args(args)
    cmp = compare_methods(config)
    ensure_dir(config.out_dir)
    path = config.out_dir / "compare.csv"
    lines = [
        "key,value",
        f"n_vertices,{cmp.n_vertices}",
        f"max_abs_difference,{cmp.max_abs_difference:.9g}",
        f"mean_abs_difference,{cmp.mean_abs_difference:.9g}",
        f"roughness_uk_deg,{cmp.roughness_uk_deg:.9g}",
        f"roughness_idw_deg,{cmp.roughness_idw_deg:.9g}",
    ]
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print(
        f"uk vs idw over {cmp.n_vertices} vertices: max |dz| = "
        f"{cmp.max_abs_difference:.4f} m, mean |dz| = {cmp.mean_abs_difference:.4f} m"
    )
    print(
        f"roughness (mean dihedral angle): uk {cmp.roughness_uk_deg:.3f} deg, "
        f"idw {cmp.roughness_idw_deg:.3f} deg"
    )
    print(f"wrote {path}")
    return 0


_COMMANDS = {
    "scan": (_cmd_scan, "sample a synthetic terrain over the configured region"),
    "convert": (_cmd_convert, "convert a wgs84 point file to UTM"),
    "mesh": (_cmd_mesh, "seed, triangulate and smooth the planar mesh"),
    "variogram": (_cmd_variogram, "estimate and fit the semivariogram"),
    "lift": (_cmd_lift, "build the DSM (mesh + interpolation) and export it"),
    "run": (_cmd_run, "full pipeline: acquire, mesh, interpolate, export all artifacts"),
    "compare": (_cmd_compare, "lift with both methods and report the differences"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsmkit",
        description="Build discrete surface models from scattered elevation samples.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handler, _ = _COMMANDS[args.command]
    try:
        return handler(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except DsmError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
