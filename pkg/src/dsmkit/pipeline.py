"""End-to-end workflow: acquire -> clip -> convert -> mesh -> interpolate ->
export, plus a two-method comparison and the mesh/CSV writers.

Configuration is a flat key = value text file (see DEFAULTS for the full key
set and the bundled demo config for a commented example); every artifact a
run writes is byte-identical across runs for a fixed config and seed.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .acquisition import (
    PointSet,
    ScanSpec,
    UtmCrs,
    Wgs84Crs,
    clip_to_region,
    convert_pointset,
    parse_point_file,
    scan_grid,
    serialize_point_file,
    synthetic_terrain,
)
from .errors import ConfigError, DataError, DsmError
from .geodesy import GeoPoint, wgs84_to_utm
from .geometry import Rect
from .interpolate import IdwConfig, UkConfig, lift_mesh
from .mesh import (
    MeshQuality,
    TriMesh,
    delaunay_triangulate,
    extract_contours,
    laplacian_smooth,
    mesh_quality,
    seed_region,
)
from .variogram import (
    MODEL_KINDS,
    ExperimentalVariogram,
    VariogramModel,
    empirical_variogram,
    fit_model,
)

logger = logging.getLogger(__name__)

_TERRAIN_PARAM_KEYS = (
    "terrain_base",
    "terrain_amplitude",
    "terrain_sigma",
    "terrain_center_x",
    "terrain_center_y",
    "terrain_slope_x",
    "terrain_slope_y",
    "terrain_angle_deg",
)

# Haut-Barr-sized demo: synthetic gaussian hill over the published corner
# rectangle, 50 x 100 scan, 5 m mesh, kriging with a fitted spherical model.
DEFAULTS = {
    "input": "synthetic",
    "terrain": "gaussian_hill",
    "terrain_base": "400",
    "terrain_amplitude": "60",
    "terrain_sigma": "80",
    "terrain_center_x": "0",
    "terrain_center_y": "0",
    "terrain_slope_x": "0",
    "terrain_slope_y": "0",
    "terrain_angle_deg": "0",
    "region_crs": "wgs84",
    "lat_min": "48.7224",
    "lat_max": "48.726",
    "lon_min": "7.3368",
    "lon_max": "7.3404",
    "x_min": "",
    "x_max": "",
    "y_min": "",
    "y_max": "",
    "zone": "",
    "hemisphere": "north",
    "rows": "50",
    "cols": "100",
    "margin": "0.1",
    "spacing": "5.0",
    "smooth_iters": "3",
    "seed_strategy": "jittered",
    "method": "uk",
    "variogram": "spherical",
    "variogram_c0": "",
    "variogram_c": "",
    "variogram_a": "",
    "variogram_bins": "15",
    "variogram_max_lag": "",
    "drift": "1",
    "neighbors": "16",
    "power": "2.0",
    "seed": "42",
    "out": "out",
    "format": "obj,vtk,csv",
    "contour_levels": "10",
}


@dataclass(frozen=True)
class PipelineConfig:
    input: str
    terrain: str
    terrain_params: dict
    region_crs: str
    region: Rect  # degrees (x=lon, y=lat) or meters, per region_crs
    utm_crs: UtmCrs | None
    rows: int
    cols: int
    margin: float
    spacing: float
    smooth_iters: int
    seed_strategy: str
    method: str
    variogram_kind: str
    explicit_model: VariogramModel | None
    variogram_bins: int
    variogram_max_lag: float | None
    drift: int
    neighbors: int | None
    power: float
    seed: int
    out_dir: Path
    formats: tuple
    contour_levels: int

    @staticmethod
    def from_mapping(mapping: dict) -> "PipelineConfig":
        unknown = set(mapping) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        raw = {**DEFAULTS, **{k: str(v) for k, v in mapping.items() if v is not None}}

        def number(key, convert=float):
            try:
                return convert(raw[key])
            except ValueError:
                raise ConfigError(f"config key {key!r}: cannot parse {raw[key]!r}") from None

        region_crs = raw["region_crs"]
        utm_crs = None
        if region_crs == "wgs84":
            region = Rect(
                number("lon_min"), number("lat_min"), number("lon_max"), number("lat_max")
            )
        elif region_crs == "utm":
            if not raw["zone"]:
                raise ConfigError("utm region needs a zone")
            utm_crs = UtmCrs(number("zone", int), raw["hemisphere"])
            region = Rect(number("x_min"), number("y_min"), number("x_max"), number("y_max"))
        else:
            raise ConfigError(f"region_crs must be wgs84 or utm, got {region_crs!r}")

        method = raw["method"]
        if method not in ("uk", "idw"):
            raise ConfigError(f"method must be uk or idw, got {method!r}")
        kind = raw["variogram"]
        if kind not in MODEL_KINDS:
            raise ConfigError(f"variogram must be one of {MODEL_KINDS}, got {kind!r}")

        explicit = None
        explicit_fields = [raw["variogram_c0"], raw["variogram_c"], raw["variogram_a"]]
        if any(explicit_fields):
            if not all(explicit_fields):
                raise ConfigError(
                    "explicit variogram needs all of variogram_c0, variogram_c, variogram_a"
                )
            explicit = VariogramModel(
                kind, number("variogram_c0"), number("variogram_c"), number("variogram_a")
            )

        neighbors_raw = raw["neighbors"]
        neighbors = None if neighbors_raw == "global" else int(neighbors_raw)

        formats = tuple(f for f in raw["format"].split(",") if f)
        bad = set(formats) - {"obj", "vtk", "csv"}
        if bad:
            raise ConfigError(f"unknown formats: {sorted(bad)}")

        drift = number("drift", int)
        if drift not in (0, 1):
            raise ConfigError(f"drift must be 0 or 1, got {drift}")

        terrain_params = {
            k.removeprefix("terrain_"): number(k) for k in _TERRAIN_PARAM_KEYS
        }

        return PipelineConfig(
            input=raw["input"],
            terrain=raw["terrain"],
            terrain_params=terrain_params,
            region_crs=region_crs,
            region=region,
            utm_crs=utm_crs,
            rows=number("rows", int),
            cols=number("cols", int),
            margin=number("margin"),
            spacing=number("spacing"),
            smooth_iters=number("smooth_iters", int),
            seed_strategy=raw["seed_strategy"],
            method=method,
            variogram_kind=kind,
            explicit_model=explicit,
            variogram_bins=number("variogram_bins", int),
            variogram_max_lag=(
                number("variogram_max_lag") if raw["variogram_max_lag"] else None
            ),
            drift=drift,
            neighbors=neighbors,
            power=number("power"),
            seed=number("seed", int),
            out_dir=Path(raw["out"]),
            formats=formats,
            contour_levels=number("contour_levels", int),
        )

    @staticmethod
    def from_file(path) -> "PipelineConfig":
        return PipelineConfig.from_mapping(parse_config_file(path))


def parse_config_file(path) -> dict:
    """Read a flat `key = value` config file ('#' comments, blank lines ok)."""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    mapping = {}
    for lineno, raw in enumerate(p.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def config_from_sources(config_path=None, overrides=None) -> PipelineConfig:
    """Defaults, then the config file, then explicit overrides."""
    mapping = {}
    if config_path is not None:
        mapping.update(parse_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is not None:
            mapping[key] = str(value)
    return PipelineConfig.from_mapping(mapping)


@dataclass
class RunReport:
    """What a pipeline run did, with counts matching the written artifacts."""

    sample_count: int
    clipped_count: int
    zone: int
    hemisphere: str
    mesh_vertices: int
    mesh_edges: int
    mesh_triangles: int
    quality_before: MeshQuality
    quality_after: MeshQuality
    method: str
    variogram_model: VariogramModel | None
    z_min: float
    z_max: float
    fallback_count: int
    interpolation_seconds: float
    artifacts: tuple


@dataclass
class MethodComparison:
    """Per-vertex UK vs IDW differences plus a smoothness proxy per method."""

    max_abs_difference: float
    mean_abs_difference: float
    roughness_uk_deg: float
    roughness_idw_deg: float
    n_vertices: int


def _fail(stage: str, artifacts: list, exc: DsmError):
    for path in artifacts:
        try:
            Path(path).unlink(missing_ok=True)
        except OSError:
            pass
    raise type(exc)(f"stage '{stage}': {exc}") from exc


def _acquire(config: PipelineConfig) -> PointSet:
    if config.input == "synthetic":
        if config.region_crs != "wgs84":
            raise ConfigError("synthetic scanning needs a wgs84 region")
        r = config.region
        center = GeoPoint(0.5 * (r.y_min + r.y_max), 0.5 * (r.x_min + r.x_max))
        params = _terrain_kwargs(config)
        provider = synthetic_terrain(config.terrain, center, **params)
        extended = r.expanded(config.margin)
        return scan_grid(provider, ScanSpec(extended, config.rows, config.cols))
    path = Path(config.input)
    if not path.exists():
        raise DataError(f"input file not found: {path}")
    return parse_point_file(path.read_text())


def _terrain_kwargs(config: PipelineConfig) -> dict:
    kind = config.terrain
    p = config.terrain_params
    if kind == "constant":
        return {"base": p["base"]}
    if kind == "inclined_plane":
        return {"base": p["base"], "slope_x": p["slope_x"], "slope_y": p["slope_y"]}
    if kind == "gaussian_hill":
        return {
            "base": p["base"],
            "amplitude": p["amplitude"],
            "sigma": p["sigma"],
            "center_x": p["center_x"],
            "center_y": p["center_y"],
        }
    if kind == "ridge":
        return {
            "base": p["base"],
            "amplitude": p["amplitude"],
            "sigma": p["sigma"],
            "angle_deg": p["angle_deg"],
        }
    raise ConfigError(f"unknown terrain kind {kind!r}")


def _mesh_rect(config: PipelineConfig, utm_ps: PointSet) -> Rect:
    if config.region_crs == "utm":
        return config.region
    zone = utm_ps.crs.zone
    corners = [
        wgs84_to_utm(GeoPoint(lat, lon), zone=zone)
        for lon, lat in config.region.corners()
    ]
    es = [c.easting for c in corners]
    ns = [c.northing for c in corners]
    return Rect(min(es), min(ns), max(es), max(ns))


def _prepare_samples(config: PipelineConfig):
    """Stages acquire/clip/convert shared by run, lift and compare."""
    acquired = _acquire(config)
    if config.region_crs == "wgs84":
        clipped = clip_to_region(acquired, config.region)
        if len(clipped) == 0:
            raise DataError("no samples inside the target region after clipping")
        utm_ps = convert_pointset(clipped, "utm")
    else:
        utm_all = convert_pointset(acquired, config.utm_crs)
        utm_ps = clip_to_region(utm_all, config.region)
        if len(utm_ps) == 0:
            raise DataError("no samples inside the target region after clipping")
        clipped = utm_ps
    return acquired, clipped, utm_ps


def _build_planar_mesh(config: PipelineConfig, rect: Rect):
    seeds = seed_region(rect, config.spacing, config.seed_strategy, config.seed)
    planar = delaunay_triangulate(seeds)
    q_before = mesh_quality(planar)
    smoothed = laplacian_smooth(planar, config.smooth_iters)
    q_after = mesh_quality(smoothed)
    return smoothed, q_before, q_after


def _variogram_model(config: PipelineConfig, utm_ps: PointSet, rect: Rect):
    """(model, empirical-or-None) for the kriging path."""
    if config.explicit_model is not None:
        return config.explicit_model, None
    max_lag = config.variogram_max_lag
    if max_lag is None:
        max_lag = 0.5 * math.hypot(rect.width, rect.height)
    ev = empirical_variogram(utm_ps, max_lag, config.variogram_bins)
    return fit_model(ev, config.variogram_kind), ev


def _lift_config(config: PipelineConfig, model: VariogramModel | None):
    if config.method == "idw":
        return IdwConfig(power=config.power, neighborhood=config.neighbors)
    return UkConfig(model=model, drift_degree=config.drift, neighborhood=config.neighbors)


def run(config: PipelineConfig) -> RunReport:
    """Execute the full workflow and write the configured artifacts."""
    artifacts = []
    stage = "acquire"
    try:
        acquired, clipped, utm_ps = _prepare_samples(config)

        stage = "mesh"
        rect = _mesh_rect(config, utm_ps)
        planar, q_before, q_after = _build_planar_mesh(config, rect)

        stage = "variogram"
        model, ev = (None, None)
        if config.method == "uk":
            model, ev = _variogram_model(config, utm_ps, rect)

        stage = "lift"
        t0 = time.perf_counter()
        lifted, summary = lift_mesh(planar, utm_ps, _lift_config(config, model))
        lift_seconds = time.perf_counter() - t0

        stage = "export"
        out = ensure_dir(config.out_dir)
        base = f"dsm_{config.method}"
        if "obj" in config.formats:
            path = out / f"{base}.obj"
            export_mesh(lifted, "obj", path)
            artifacts.append(path)
        if "vtk" in config.formats:
            path = out / f"{base}.vtk"
            export_mesh(lifted, "vtk", path)
            artifacts.append(path)
        if "csv" in config.formats:
            levels = contour_levels(summary.z_min, summary.z_max, config.contour_levels)
            contours = extract_contours(lifted, levels) if levels else []
            path = out / "contours.csv"
            write_contours_csv(path, levels, contours)
            artifacts.append(path)
            if ev is not None:
                path = out / "variogram.csv"
                write_variogram_csv(path, ev)
                artifacts.append(path)

        report = RunReport(
            sample_count=len(acquired),
            clipped_count=len(clipped),
            zone=utm_ps.crs.zone,
            hemisphere=utm_ps.crs.hemisphere,
            mesh_vertices=lifted.n_vertices,
            mesh_edges=len(lifted.edges()),
            mesh_triangles=lifted.n_triangles,
            quality_before=q_before,
            quality_after=q_after,
            method=config.method,
            variogram_model=model,
            z_min=summary.z_min,
            z_max=summary.z_max,
            fallback_count=len(summary.fallback_vertices),
            interpolation_seconds=lift_seconds,
            artifacts=tuple(artifacts),
        )
        if "csv" in config.formats:
            path = out / "report.csv"
            write_report_csv(path, report)
            artifacts.append(path)
            report.artifacts = tuple(artifacts)
        return report
    except DsmError as e:
        _fail(stage, artifacts, e)


def compare_methods(config: PipelineConfig) -> MethodComparison:
    """Lift one planar mesh with both methods and compare the surfaces."""
    stage = "acquire"
    try:
        _, _, utm_ps = _prepare_samples(config)
        stage = "mesh"
        rect = _mesh_rect(config, utm_ps)
        planar, _, _ = _build_planar_mesh(config, rect)
        stage = "variogram"
        model, _ = _variogram_model(config, utm_ps, rect)
        stage = "lift"
        uk_mesh, _ = lift_mesh(
            planar, utm_ps, UkConfig(model, config.drift, config.neighbors)
        )
        idw_mesh, _ = lift_mesh(
            planar, utm_ps, IdwConfig(config.power, config.neighbors)
        )
    except DsmError as e:
        _fail(stage, [], e)

    diff = np.abs(uk_mesh.vertices[:, 2] - idw_mesh.vertices[:, 2])
    return MethodComparison(
        max_abs_difference=float(diff.max()),
        mean_abs_difference=float(diff.mean()),
        roughness_uk_deg=dihedral_roughness(uk_mesh),
        roughness_idw_deg=dihedral_roughness(idw_mesh),
        n_vertices=planar.n_vertices,
    )


def dihedral_roughness(m: TriMesh) -> float:
    """Mean angle (degrees) between normals of triangles sharing an edge."""
    if not m.is_3d:
        raise DataError("roughness needs a lifted (3D) mesh")
    tris = m.triangles
    v = m.vertices
    normals = np.cross(v[tris[:, 1]] - v[tris[:, 0]], v[tris[:, 2]] - v[tris[:, 0]])
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    normals = normals / norms

    edge_owner = {}
    angles = []
    for t, tri in enumerate(tris):
        for k in range(3):
            e = (int(tri[k]), int(tri[(k + 1) % 3]))
            key = (min(e), max(e))
            other = edge_owner.pop(key, None)
            if other is None:
                edge_owner[key] = t
            else:
                cosv = float(np.clip(normals[t] @ normals[other], -1.0, 1.0))
                angles.append(math.degrees(math.acos(cosv)))
    return float(np.mean(angles)) if angles else 0.0


def contour_levels(z_min: float, z_max: float, count: int) -> list:
    """`count` evenly spaced interior levels across (z_min, z_max)."""
    if count < 1 or z_max <= z_min:
        return []
    step = (z_max - z_min) / (count + 1)
    return [z_min + (i + 1) * step for i in range(count)]


def export_mesh(m: TriMesh, fmt: str, path) -> None:
    """Write a lifted mesh as Wavefront OBJ or legacy ASCII VTK PolyData."""
    if not m.is_3d:
        raise DataError("export needs a lifted (3D) mesh; add elevations first")
    if m.n_triangles == 0 or m.n_vertices == 0:
        raise DataError("refusing to export an empty mesh")
    if fmt == "obj":
        lines = [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in m.vertices]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in m.triangles]
    elif fmt == "vtk":
        lines = [
            "# vtk DataFile Version 3.0",
            "terrain surface",
            "ASCII",
            "DATASET POLYDATA",
            f"POINTS {m.n_vertices} double",
        ]
        lines += [f"{x:.6f} {y:.6f} {z:.6f}" for x, y, z in m.vertices]
        lines.append(f"POLYGONS {m.n_triangles} {4 * m.n_triangles}")
        lines += [f"3 {a} {b} {c}" for a, b, c in m.triangles]
    else:
        raise ConfigError(f"unknown mesh format {fmt!r}; expected obj or vtk")
    _write_text(path, "\n".join(lines) + "\n")


def read_obj(path) -> TriMesh:
    """Read back an OBJ written by export_mesh (v/f lines only)."""
    vertices = []
    faces = []
    for raw in Path(path).read_text().splitlines():
        parts = raw.split()
        if not parts:
            continue
        if parts[0] == "v":
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    if not vertices or not faces:
        raise DataError(f"no mesh data in {path}")
    return TriMesh(np.array(vertices), np.array(faces))


def write_contours_csv(path, levels, contours_per_level) -> None:
    lines = ["level,polyline_id,x,y"]
    polyline_id = 0
    for level, polylines in zip(levels, contours_per_level):
        for poly in polylines:
            for x, y in poly:
                lines.append(f"{level:.6f},{polyline_id},{x:.6f},{y:.6f}")
            polyline_id += 1
    _write_text(path, "\n".join(lines) + "\n")


def write_variogram_csv(path, ev: ExperimentalVariogram) -> None:
    lines = ["lag_center,gamma,pair_count"]
    for lag, gamma, count in zip(ev.lags, ev.gammas, ev.pair_counts):
        lines.append(f"{lag:.9g},{gamma:.9g},{count}")
    _write_text(path, "\n".join(lines) + "\n")


def write_report_csv(path, report: RunReport) -> None:
    q0 = report.quality_before
    q1 = report.quality_after
    rows = [
        ("sample_count", report.sample_count),
        ("clipped_count", report.clipped_count),
        ("utm_zone", report.zone),
        ("hemisphere", report.hemisphere),
        ("mesh_vertices", report.mesh_vertices),
        ("mesh_edges", report.mesh_edges),
        ("mesh_triangles", report.mesh_triangles),
        ("min_angle_before_deg", f"{q0.min_angle:.9g}"),
        ("mean_min_angle_before_deg", f"{q0.mean_min_angle:.9g}"),
        ("worst_aspect_before", f"{q0.worst_aspect_ratio:.9g}"),
        ("min_angle_after_deg", f"{q1.min_angle:.9g}"),
        ("mean_min_angle_after_deg", f"{q1.mean_min_angle:.9g}"),
        ("worst_aspect_after", f"{q1.worst_aspect_ratio:.9g}"),
        ("method", report.method),
        ("z_min", f"{report.z_min:.9g}"),
        ("z_max", f"{report.z_max:.9g}"),
        ("uk_fallback_vertices", report.fallback_count),
    ]
    if report.variogram_model is not None:
        vm = report.variogram_model
        rows += [
            ("variogram_kind", vm.kind),
            ("variogram_nugget", f"{vm.nugget:.9g}"),
            ("variogram_partial_sill", f"{vm.partial_sill:.9g}"),
            ("variogram_range", f"{vm.range_:.9g}"),
        ]
    # wall-clock timing stays off the artifact so runs are byte-identical
    lines = ["key,value"] + [f"{k},{v}" for k, v in rows]
    _write_text(path, "\n".join(lines) + "\n")


def write_point_file(path, ps: PointSet, header: str | None = None) -> None:
    """Write a point set as text: lat lon alt (wgs84) or easting northing alt."""
    if isinstance(ps.crs, Wgs84Crs):
        body = serialize_point_file(ps)
    else:
        body = "\n".join(f"{p.easting!r} {p.northing!r} {p.altitude!r}" for p in ps) + "\n"
    text = (f"# {header}\n" if header else "") + body
    _write_text(path, text)


def ensure_dir(path) -> Path:
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataError(f"cannot create output directory {p}: {e}") from e
    return p


def _write_text(path, text: str) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise DataError(f"cannot write {path}: {e}") from e
