"""End-to-end segmentation: recipes -> PC maps -> clusterings -> best-SR mask.

Every (recipe x clustering method) pairing is one candidate. Candidates are
scored by silhouette rate; the winner's grid labels are upsampled to image
resolution as the final mask. Failures (degenerate spectra, single clusters)
are recorded per candidate, never fatal, unless nothing survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import clustering, quality
from .exceptions import (
    AllCandidatesErrored,
    AllRecipesFailed,
    LabelOutOfRange,
    PixelsegError,
    SingleCluster,
)
from .feature_prep import FeatureRecipe, PixelMatrix, concat_features
from .pca import PcMaps, fit_pca, project_pc_maps
from .tensor_io import FeatureTensor, LabelMap

METHODS = ("kmeans", "hierarchical")


@dataclass
class RunConfig:
    """Knobs shared by the pipeline and the CLI."""

    t_eig: float = 0.3
    t_sil: float = 0.3
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    k_override: int | None = None
    n_max_silhouette: int = quality.DEFAULT_N_MAX
    n_hier_max: int = clustering.DEFAULT_HIER_MAX
    standardize: bool = True

    def __post_init__(self):
        if not 0.0 < self.t_eig < 1.0:
            raise ValueError(f"t_eig must lie in (0, 1), got {self.t_eig}")
        if not -1.0 <= self.t_sil < 1.0:
            raise ValueError(f"t_sil must lie in [-1, 1), got {self.t_sil}")
        self.methods = tuple(self.methods)
        if not self.methods:
            raise ValueError("at least one clustering method is required")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")

    def as_dict(self) -> dict:
        return {
            "t_eig": self.t_eig,
            "t_sil": self.t_sil,
            "seed": self.seed,
            "methods": list(self.methods),
            "k_override": self.k_override,
            "n_max_silhouette": self.n_max_silhouette,
            "n_hier_max": self.n_hier_max,
            "standardize": self.standardize,
        }


@dataclass
class Representation:
    """One recipe's PC maps and selected K (or the reason it failed)."""

    recipe_id: str
    pc_maps: PcMaps | None = None
    k: int | None = None
    eigenvalues: np.ndarray | None = None
    error: str | None = None


@dataclass
class Candidate:
    """One (recipe x method) clustering outcome."""

    recipe_id: str
    method: str | None
    k: int | None
    pc_maps: PcMaps | None = None
    labels: clustering.ClusterLabels | None = None
    sr: float = -math.inf
    error: str | None = None


@dataclass
class SegmentationResult:
    winner: Candidate
    label_map: LabelMap
    report: list[dict] = field(default_factory=list)


def _gather(recipe: FeatureRecipe, tensors) -> list[FeatureTensor]:
    if isinstance(tensors, dict):
        missing = [s for s in recipe.sources if s not in tensors]
        if missing:
            raise KeyError(f"recipe {recipe.name!r} references unknown tensors {missing}")
        return [tensors[s] for s in recipe.sources]
    return list(tensors)


def build_candidates(
    recipes: list[FeatureRecipe], tensors, config: RunConfig
) -> list[Representation]:
    """Derive PC maps and K for every recipe; failures are recorded, not raised.

    ``tensors`` is either a dict keyed by the recipes' source names or a list
    (only meaningful with a single recipe). Raises AllRecipesFailed when no
    recipe yields a representation.
    """
    if not recipes:
        raise AllRecipesFailed("no recipes given")
    reps: list[Representation] = []
    for recipe in recipes:
        try:
            matrix = concat_features(recipe, _gather(recipe, tensors))
            model = fit_pca(matrix, t_eig=config.t_eig)
            if config.k_override is not None:
                k = int(config.k_override)
                pc_k = min(k, model.n_features_in_)
            else:
                k = pc_k = model.k_
            maps = project_pc_maps(matrix, model, k=pc_k)
            reps.append(
                Representation(recipe.name, maps, k, model.eigenvalues_.copy())
            )
        except (PixelsegError, KeyError, ValueError) as exc:
            reps.append(
                Representation(recipe.name, error=f"{type(exc).__name__}: {exc}")
            )
    if all(r.error is not None for r in reps):
        raise AllRecipesFailed(
            "; ".join(f"{r.recipe_id}: {r.error}" for r in reps)
        )
    return reps


def _cluster(pm: PixelMatrix, k: int, method: str, config: RunConfig):
    if method == "kmeans":
        return clustering.kmeans(pm, k, seed=config.seed)
    if pm.rows > config.n_hier_max:
        sub, _ = clustering.downsample_rows(pm, config.n_hier_max)
        part = clustering.hierarchical(sub, k, max_points=config.n_hier_max)
        centroids = np.stack(
            [sub.values[part.labels == c].mean(axis=0) for c in range(k)]
        )
        full = clustering.assign_nearest(pm, centroids, method="hierarchical")
        if np.unique(full.labels).size < k:
            raise SingleCluster(
                f"nearest-centroid extension collapsed below {k} clusters"
            )
        return full
    return clustering.hierarchical(pm, k, max_points=config.n_hier_max)


def run_segmentation(
    recipes: list[FeatureRecipe],
    tensors,
    image_h: int | None = None,
    image_w: int | None = None,
    config: RunConfig | None = None,
) -> SegmentationResult:
    """Cluster every candidate, pick the highest silhouette rate, emit the mask.

    Ties keep the earliest candidate (recipe order, k-means before
    hierarchical). When image dims are omitted the mask stays at the winner's
    grid resolution. Raises AllCandidatesErrored when nothing is scoreable.
    """
    config = config or RunConfig()
    reps = build_candidates(recipes, tensors, config)

    candidates: list[Candidate] = []
    for rep in reps:
        if rep.error is not None:
            candidates.append(Candidate(rep.recipe_id, None, None, error=rep.error))
            continue
        pm = PixelMatrix(
            rep.pc_maps.values.astype(np.float32), rep.pc_maps.grid_h, rep.pc_maps.grid_w
        )
        for method in config.methods:
            cand = Candidate(rep.recipe_id, method, rep.k, pc_maps=rep.pc_maps)
            try:
                labels = _cluster(pm, rep.k, method, config)
                report = quality.sr_for_clustering(
                    pm, labels, t_sil=config.t_sil, n_max=config.n_max_silhouette
                )
                cand.labels = labels
                cand.sr = report.sr
            except PixelsegError as exc:
                cand.error = f"{type(exc).__name__}: {exc}"
            candidates.append(cand)

    winner: Candidate | None = None
    for cand in candidates:
        if cand.error is None and (winner is None or cand.sr > winner.sr):
            winner = cand
    if winner is None:
        raise AllCandidatesErrored(
            "; ".join(f"{c.recipe_id}/{c.method}: {c.error}" for c in candidates)
        )

    grid_h, grid_w = winner.pc_maps.grid_h, winner.pc_maps.grid_w
    label_map = upsample_labels(
        winner.labels, grid_h, grid_w, image_h or grid_h, image_w or grid_w
    )
    report = [
        {
            "recipe": c.recipe_id,
            "method": c.method,
            "k": c.k,
            "sr": None if c.error is not None else c.sr,
            "error": c.error,
        }
        for c in candidates
    ]
    return SegmentationResult(winner, label_map, report)


def _nearest_cells(n_out: int, n_grid: int) -> np.ndarray:
    # Nearest grid-cell center to each pixel center; exact ties take the
    # smaller index.
    u = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_grid / n_out) - 0.5
    idx = np.ceil(u - 0.5).astype(np.intp)
    return np.clip(idx, 0, n_grid - 1)


def upsample_labels(
    labels: clustering.ClusterLabels,
    grid_h: int,
    grid_w: int,
    image_h: int,
    image_w: int,
) -> LabelMap:
    """Nearest-neighbor upsampling of grid labels to image resolution."""
    arr = labels.labels
    if arr.shape[0] != grid_h * grid_w:
        raise ValueError(f"{arr.shape[0]} labels cannot fill a {grid_h}x{grid_w} grid")
    if labels.k > 255:
        raise LabelOutOfRange(f"{labels.k} clusters exceed the 8-bit label space")
    grid = arr.reshape(grid_h, grid_w)
    ys = _nearest_cells(image_h, grid_h)
    xs = _nearest_cells(image_w, grid_w)
    return LabelMap(grid[ys[:, None], xs[None, :]].astype(np.uint8))
