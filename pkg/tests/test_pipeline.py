import math

import numpy as np
import pytest

from pixelseg import (
    ClusterLabels,
    FeatureRecipe,
    FeatureTensor,
    RunConfig,
    build_candidates,
    evaluate,
    run_segmentation,
    upsample_labels,
)
from pixelseg.exceptions import AllCandidatesErrored, AllRecipesFailed

from helpers import make_three_region_tensor, make_trio_channel_tensor


def test_three_signature_tensor_selects_three_components():
    tensor = make_trio_channel_tensor()
    # independent spectrum check on the standardized pixel rows
    rows = tensor.data.reshape(-1, 6).astype(np.float64)
    rows = (rows - rows.mean(0)) / rows.std(0)
    lam = np.sort(np.linalg.eigvalsh(np.cov(rows, rowvar=False)))[::-1]
    assert np.count_nonzero(lam / lam[0] > 0.3) == 3

    reps = build_candidates(
        [FeatureRecipe("trio", ("t",))], {"t": tensor}, RunConfig()
    )
    assert reps[0].error is None
    assert reps[0].k == 3
    assert reps[0].pc_maps.k == 3


def test_constant_tensor_yields_k1_then_single_cluster_error():
    tensor = FeatureTensor(np.full((8, 8, 3), 2.5, np.float32))
    reps = build_candidates(
        [FeatureRecipe("flat", ("t",))], {"t": tensor}, RunConfig()
    )
    assert reps[0].k == 1
    with pytest.raises(AllCandidatesErrored):
        run_segmentation([FeatureRecipe("flat", ("t",))], {"t": tensor})


def test_recipes_fail_independently():
    good = make_trio_channel_tensor()
    recipes = [
        FeatureRecipe("missing", ("absent",)),
        FeatureRecipe("good", ("t",)),
    ]
    reps = build_candidates(recipes, {"t": good}, RunConfig())
    assert reps[0].error is not None
    assert reps[1].error is None


def test_two_recipes_have_independent_k():
    trio = make_trio_channel_tensor()
    tensor2, _ = make_three_region_tensor(seed=1)
    recipes = [FeatureRecipe("a", ("x",)), FeatureRecipe("b", ("y",))]
    reps = build_candidates(recipes, {"x": trio, "y": tensor2}, RunConfig())
    assert [r.k for r in reps] == [3, 3]
    assert reps[0].pc_maps.values.shape != reps[1].pc_maps.values.shape


def test_all_recipes_failed():
    with pytest.raises(AllRecipesFailed):
        build_candidates([FeatureRecipe("r", ("absent",))], {}, RunConfig())
    with pytest.raises(AllRecipesFailed):
        build_candidates([], {}, RunConfig())


def test_planted_regions_end_to_end():
    tensor, planted = make_three_region_tensor()
    result = run_segmentation(
        [FeatureRecipe("planted", ("t",))], {"t": tensor}, 32, 32
    )
    assert result.winner.k == 3
    assert result.winner.sr >= 0.95
    assert np.unique(result.label_map.labels).size == 3
    report = evaluate(result.label_map, planted)
    assert report.p_acc >= 0.99


def test_winner_has_max_sr_and_ties_keep_first():
    tensor, _ = make_three_region_tensor()
    recipes = [FeatureRecipe("a", ("t",)), FeatureRecipe("b", ("t",))]
    result = run_segmentation(recipes, {"t": tensor})
    scored = [row for row in result.report if row["sr"] is not None]
    assert result.winner.sr == max(row["sr"] for row in scored)
    # duplicate recipes tie pairwise; the winner must be the earliest entry
    first_best = next(
        row for row in scored if row["sr"] == result.winner.sr
    )
    assert (result.winner.recipe_id, result.winner.method) == (
        first_best["recipe"],
        first_best["method"],
    )
    srs_a = [r["sr"] for r in scored if r["recipe"] == "a"]
    srs_b = [r["sr"] for r in scored if r["recipe"] == "b"]
    assert srs_a == srs_b


def test_single_candidate_wins_regardless():
    tensor, _ = make_three_region_tensor()
    config = RunConfig(methods=("hierarchical",))
    result = run_segmentation(
        [FeatureRecipe("only", ("t",))], {"t": tensor}, config=config
    )
    assert result.winner.method == "hierarchical"
    assert len(result.report) == 1


def test_deterministic_end_to_end():
    tensor, _ = make_three_region_tensor()
    recipes = [FeatureRecipe("r", ("t",))]
    a = run_segmentation(recipes, {"t": tensor}, 48, 40)
    b = run_segmentation(recipes, {"t": tensor}, 48, 40)
    assert np.array_equal(a.label_map.labels, b.label_map.labels)
    assert a.report == b.report


def test_output_labels_within_winner_range():
    tensor, _ = make_three_region_tensor()
    result = run_segmentation([FeatureRecipe("r", ("t",))], {"t": tensor}, 64, 64)
    labels = np.unique(result.label_map.labels)
    assert labels.min() >= 0
    assert labels.max() < result.winner.k


def test_k_override_controls_cluster_count():
    tensor, _ = make_three_region_tensor()
    config = RunConfig(k_override=2)
    result = run_segmentation([FeatureRecipe("r", ("t",))], {"t": tensor}, config=config)
    assert result.winner.k == 2
    assert np.unique(result.label_map.labels).size == 2


def test_hierarchical_subsamples_large_grids():
    tensor, planted = make_three_region_tensor(h=40, w=40)
    config = RunConfig(methods=("hierarchical",), n_hier_max=500)
    result = run_segmentation([FeatureRecipe("r", ("t",))], {"t": tensor}, 40, 40, config)
    report = evaluate(result.label_map, planted)
    assert report.p_acc >= 0.99


def test_upsample_identity():
    labels = ClusterLabels(np.array([0, 1, 2, 1]), 3, "kmeans")
    out = upsample_labels(labels, 2, 2, 2, 2)
    assert np.array_equal(out.labels, [[0, 1], [2, 1]])


def test_upsample_single_cell():
    labels = ClusterLabels(np.array([1]), 2, "kmeans")
    out = upsample_labels(labels, 1, 1, 3, 5)
    assert out.labels.shape == (3, 5)
    assert np.all(out.labels == 1)


def test_upsample_quadrants():
    labels = ClusterLabels(np.array([0, 1, 2, 3]), 4, "kmeans")
    out = upsample_labels(labels, 2, 2, 4, 4)
    expected = np.array(
        [[0, 0, 1, 1], [0, 0, 1, 1], [2, 2, 3, 3], [2, 2, 3, 3]]
    )
    assert np.array_equal(out.labels, expected)


def test_upsample_never_invents_labels():
    rng = np.random.default_rng(8)
    flat = rng.integers(0, 5, size=35)
    labels = ClusterLabels(flat, 5, "kmeans")
    out = upsample_labels(labels, 5, 7, 17, 13)
    assert set(np.unique(out.labels)) <= set(np.unique(flat))


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(t_eig=0.0)
    with pytest.raises(ValueError):
        RunConfig(t_sil=1.0)
    with pytest.raises(ValueError):
        RunConfig(methods=())
    with pytest.raises(ValueError):
        RunConfig(methods=("dbscan",))
    assert math.isclose(RunConfig().t_eig, 0.3)
