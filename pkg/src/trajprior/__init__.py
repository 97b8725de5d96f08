"""Trajectory map-prior toolkit.

Converts crowdsourced vehicle trajectories into map-prior representations
(density/direction heatmaps, representative trajectory tokens), provides
gradient-verified alignment/fusion kernels, and scores priors against
ground-truth lane centerlines.
"""

from ._kernels import BACKEND as kernel_backend
from .core import (CenterlineMap, ContractError, FeatureMap, GridSpec, Heatmap,
                   Point2, Trajectory, TrajectorySet, fold_axial, segment_angle,
                   world_to_cell)
from .ingest import (IngestConfig, ParseError, filter_by_length,
                     parse_centerlines, parse_trajectories, retention_check,
                     serialize_centerlines, serialize_trajectories, smooth,
                     smooth_set, synth_scene)
from .metrics import ae_dist, ae_type, iou, prior_iou
from .raster import (heatmap_to_feature, rasterize_centerlines,
                     rasterize_polylines, rasterize_trajectories)
from .selection import (ClusterResult, ResampledTrajectory, SampleResult,
                        euclid_flat_dist, fps, frechet_dist, kmeans, resample)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend", "ContractError", "Point2", "Trajectory", "TrajectorySet",
    "GridSpec", "Heatmap", "FeatureMap", "CenterlineMap", "world_to_cell",
    "segment_angle", "fold_axial", "IngestConfig", "ParseError",
    "parse_trajectories", "parse_centerlines", "serialize_trajectories",
    "serialize_centerlines", "filter_by_length", "smooth", "smooth_set",
    "retention_check", "synth_scene", "rasterize_trajectories",
    "rasterize_centerlines", "rasterize_polylines", "heatmap_to_feature",
    "ResampledTrajectory", "ClusterResult", "SampleResult", "resample",
    "euclid_flat_dist", "frechet_dist", "kmeans", "fps",
    "iou", "prior_iou", "ae_type", "ae_dist",
]
