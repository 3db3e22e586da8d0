"""Multi-view consensus placement of 3D landmarks on triangle-mesh surfaces.

The pipeline renders a mesh from many sampled orthographic views, detects 2D
landmark candidates per view (from heatmaps or a ground-truth oracle),
back-projects the detections to 3D rays, fuses each landmark's rays with a
RANSAC-wrapped least-squares solve, and snaps the result to the surface.
"""

from .camera import CameraSpec, ViewSamplingConfig, project_point, sample_cameras
from .consensus import (
    ConsensusResult,
    LandmarkRay,
    RansacConfig,
    back_project,
    lsq_point_from_rays,
    place_landmarks,
    point_to_ray_sqdist,
    ransac_consensus,
)
from .curvature import CurvatureField, estimate_curvature_field, estimate_vertex_curvature
from .detect import Detection2D, HeatmapStack, OracleConfig, decode_heatmaps, oracle_detect
from .export import export_training_view, gaussian_heatmap, read_heatmap_stack, write_heatmap_stack
from .mesh import BoundingBox, MeshFormatError, TriangleMesh, grow_neighborhood, load_mesh, save_mesh
from .octree import Octree, build_octree, closest_surface_point
from .pipeline import (
    EvaluationReport,
    LandmarkSet,
    PipelineConfig,
    PipelineError,
    evaluate,
    evaluate_batch,
    load_landmarks,
    run_pipeline,
    save_landmarks,
    view_sweep,
)
from .render import RenderedView, render_view

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CameraSpec",
    "ConsensusResult",
    "CurvatureField",
    "Detection2D",
    "EvaluationReport",
    "HeatmapStack",
    "LandmarkRay",
    "LandmarkSet",
    "MeshFormatError",
    "Octree",
    "OracleConfig",
    "PipelineConfig",
    "PipelineError",
    "RansacConfig",
    "RenderedView",
    "TriangleMesh",
    "ViewSamplingConfig",
    "back_project",
    "build_octree",
    "closest_surface_point",
    "decode_heatmaps",
    "estimate_curvature_field",
    "estimate_vertex_curvature",
    "evaluate",
    "evaluate_batch",
    "export_training_view",
    "gaussian_heatmap",
    "grow_neighborhood",
    "load_landmarks",
    "load_mesh",
    "lsq_point_from_rays",
    "oracle_detect",
    "place_landmarks",
    "point_to_ray_sqdist",
    "project_point",
    "ransac_consensus",
    "read_heatmap_stack",
    "render_view",
    "run_pipeline",
    "sample_cameras",
    "save_landmarks",
    "save_mesh",
    "view_sweep",
    "write_heatmap_stack",
]
