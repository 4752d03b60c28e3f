"""Class-agnostic image segmentation by clustering PCA-projected pixel features."""

from .clustering import (
    AgglomerativeClusterer,
    ClusterLabels,
    SeededKMeans,
    assign_nearest,
    downsample_rows,
    hierarchical,
    kmeans,
)
from .evaluation import EvalReport, evaluate, match_labels, mean_iou, pixel_accuracy
from .feature_prep import (
    FeatureRecipe,
    PixelMatrix,
    concat_features,
    resample_bilinear,
    standardize_channels,
)
from .pca import PcMaps, PixelPca, fit_pca, project_pc_maps, select_k
from .pipeline import (
    Candidate,
    RunConfig,
    SegmentationResult,
    build_candidates,
    run_segmentation,
    upsample_labels,
)
from .quality import (
    SilhouetteReport,
    silhouette_rate,
    silhouette_scores,
    sr_for_clustering,
)
from .tensor_io import (
    FeatureTensor,
    LabelMap,
    read_ftz,
    read_label_png,
    write_ftz,
    write_label_png,
)

__version__ = "0.1.0"

__all__ = [
    "AgglomerativeClusterer",
    "Candidate",
    "ClusterLabels",
    "EvalReport",
    "FeatureRecipe",
    "FeatureTensor",
    "LabelMap",
    "PcMaps",
    "PixelMatrix",
    "PixelPca",
    "RunConfig",
    "SeededKMeans",
    "SegmentationResult",
    "SilhouetteReport",
    "assign_nearest",
    "build_candidates",
    "concat_features",
    "downsample_rows",
    "evaluate",
    "fit_pca",
    "hierarchical",
    "kmeans",
    "match_labels",
    "mean_iou",
    "pixel_accuracy",
    "project_pc_maps",
    "read_ftz",
    "read_label_png",
    "resample_bilinear",
    "run_segmentation",
    "select_k",
    "silhouette_rate",
    "silhouette_scores",
    "sr_for_clustering",
    "standardize_channels",
    "upsample_labels",
    "write_ftz",
    "write_label_png",
]
