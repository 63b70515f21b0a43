"""Terrain toolkit: discrete surface models from scattered elevation samples.

Workflow: acquire elevation samples (point files or synthetic scan grids),
convert WGS-84 to UTM, seed and Delaunay-triangulate a planar mesh, smooth
it, then lift vertices to 3D by universal kriging or inverse distance
weighting. The `pipeline` module and the `dsmkit` CLI chain the stages.
"""

from .acquisition import (
    WGS84,
    ElevationProvider,
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
from .errors import ConfigError, DataError, DsmError, NumericalError, ParseError
from .geodesy import GeoPoint, UtmPoint, parse_dms, utm_to_wgs84, utm_zone_for, wgs84_to_utm
from .geometry import Rect
from .interpolate import (
    IdwConfig,
    KrigingSolution,
    KrigingSystem,
    UkConfig,
    drift_basis,
    idw_predict,
    lift_mesh,
    uk_predict,
    uk_solve,
)
from .mesh import (
    MeshQuality,
    TriMesh,
    delaunay_triangulate,
    extract_contours,
    laplacian_smooth,
    mesh_quality,
    seed_region,
)
from .pipeline import (
    MethodComparison,
    PipelineConfig,
    RunReport,
    compare_methods,
    export_mesh,
    read_obj,
    run,
)
from .variogram import (
    ExperimentalVariogram,
    VariogramModel,
    empirical_variogram,
    fit_model,
    model_gamma,
)

__version__ = "0.1.0"

__all__ = [
    "WGS84",
    "ConfigError",
    "DataError",
    "DsmError",
    "ElevationProvider",
    "ExperimentalVariogram",
    "GeoPoint",
    "IdwConfig",
    "KrigingSolution",
    "KrigingSystem",
    "MeshQuality",
    "MethodComparison",
    "NumericalError",
    "ParseError",
    "PipelineConfig",
    "PointSet",
    "Rect",
    "RunReport",
    "ScanSpec",
    "TriMesh",
    "UkConfig",
    "UtmCrs",
    "UtmPoint",
    "VariogramModel",
    "Wgs84Crs",
    "clip_to_region",
    "compare_methods",
    "convert_pointset",
    "delaunay_triangulate",
    "drift_basis",
    "empirical_variogram",
    "export_mesh",
    "extract_contours",
    "fit_model",
    "idw_predict",
    "laplacian_smooth",
    "lift_mesh",
    "mesh_quality",
    "model_gamma",
    "parse_dms",
    "parse_point_file",
    "read_obj",
    "run",
    "scan_grid",
    "seed_region",
    "serialize_point_file",
    "synthetic_terrain",
    "uk_predict",
    "uk_solve",
    "utm_to_wgs84",
    "utm_zone_for",
    "wgs84_to_utm",
    "__version__",
]
