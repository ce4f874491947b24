import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import mann_whitney_auc
from voicevg.errors import (
    BadC,
    DegenerateTruth,
    DimensionMismatch,
    EmptyData,
    EmptyScores,
    LengthMismatch,
    MissingScore,
    SingleClass,
    UntrainedFusion,
)
from voicevg.learn import (
    ForestConfig,
    LabeledDataset,
    RandomForestModel,
    Tree,
    aggregate_patient,
    evaluate,
    f1_from,
    fuse_scores,
    label_of,
    patient_aggregate,
    predict_proba,
    roc_auc,
    train_random_forest,
)

SMALL = ForestConfig(n_trees=25, max_depth=6, min_leaf=1, seed=3)


def blobs(n=200, margin=2.0, seed=0):
    rng = np.random.default_rng(seed)
    y = np.repeat([0, 1], n // 2)
    X = rng.uniform(-1, 1, (n, 2))
    X[:, 0] += np.where(y == 1, 1 + margin / 2, -1 - margin / 2)
    return LabeledDataset(X, y)


def xor_data():
    X = np.tile([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]], (50, 1))
    y = np.tile([0, 1, 1, 0], 50)
    return LabeledDataset(X, y)


def leaf(p):
    return Tree(np.array([-1]), np.array([0.0]), np.array([-1]), np.array([-1]), np.array([[1 - p, p]]))


def forest_of(*ps, n_features=3):
    return RandomForestModel([leaf(p) for p in ps], ForestConfig(n_trees=len(ps)), n_features)


# -- forest ------------------------------------------------------------------

def test_blobs_fit_exactly():
    data = blobs()
    model = train_random_forest(data, SMALL)
    labels = (model.predict_proba(data.X) >= 0.5).astype(int)
    assert np.mean(labels == data.y) == 1.0


def test_same_seed_byte_identical():
    data = blobs()
    assert train_random_forest(data, SMALL).to_json() == train_random_forest(data, SMALL).to_json()


def test_different_seed_differs():
    data = blobs()
    other = ForestConfig(n_trees=25, max_depth=6, min_leaf=1, seed=4)
    assert train_random_forest(data, SMALL).to_json() != train_random_forest(data, other).to_json()


def test_xor_learned():
    data = xor_data()
    model = train_random_forest(data, ForestConfig(n_trees=30, max_depth=3, min_leaf=1, seed=0))
    acc = np.mean((model.predict_proba(data.X) >= 0.5) == data.y)
    assert acc >= 0.95


def test_row_order_invariance():
    data = blobs(seed=5)
    perm = np.random.default_rng(1).permutation(data.y.size)
    shuffled = LabeledDataset(data.X[perm], data.y[perm])
    assert train_random_forest(data, SMALL).to_json() == train_random_forest(shuffled, SMALL).to_json()


def test_threads_match_serial():
    data = blobs(seed=2)
    assert train_random_forest(data, SMALL, n_threads=3).to_json() == train_random_forest(data, SMALL).to_json()


def test_zscore_model_predicts_consistently():
    data = blobs(seed=6)
    data = LabeledDataset(data.X * [1000.0, 0.001] + [5.0, -3.0], data.y)
    model = train_random_forest(data, SMALL, zscore=True)
    assert model.normalization is not None
    again = RandomForestModel.from_json(model.to_json())
    np.testing.assert_array_equal(again.predict_proba(data.X), model.predict_proba(data.X))


def test_single_class_and_empty():
    with pytest.raises(SingleClass):
        train_random_forest(LabeledDataset(np.zeros((5, 2)), np.ones(5)), SMALL)
    with pytest.raises(EmptyData):
        LabeledDataset(np.zeros((0, 2)), np.zeros(0))
    with pytest.raises(EmptyData):
        train_random_forest(LabeledDataset(np.zeros((1, 2)), [1]), SMALL)


def test_dimension_mismatch():
    model = train_random_forest(blobs(), SMALL)
    with pytest.raises(DimensionMismatch):
        predict_proba(model, np.zeros(3))
    with pytest.raises(DimensionMismatch):
        model.predict_proba(np.zeros((2, 5)))


def test_predict_proba_hand_forests():
    assert predict_proba(forest_of(0.5), np.array([9.0, -1.0, 3.0])) == 0.5
    assert predict_proba(forest_of(1.0, 1.0, 1.0), np.zeros(3)) == 1.0
    assert predict_proba(forest_of(0.2, 0.4, 0.9), np.zeros(3)) == pytest.approx(0.5, abs=1e-12)


def test_hand_stump_routes_on_threshold():
    stump = Tree(np.array([1, -1, -1]), np.array([0.5, 0, 0]), np.array([1, -1, -1]), np.array([2, -1, -1]),
                 np.array([[0.5, 0.5], [0.9, 0.1], [0.2, 0.8]]))
    model = RandomForestModel([stump], ForestConfig(n_trees=1), 2)
    np.testing.assert_allclose(model.predict_proba([[0, 0.5], [0, 0.51]]), [0.1, 0.8])


def test_json_roundtrip_and_leaf_distributions():
    model = train_random_forest(blobs(seed=9), SMALL)
    again = RandomForestModel.from_json(model.to_json())
    assert again.to_json() == model.to_json()
    for tree in model.trees:
        np.testing.assert_allclose(tree.proba.sum(axis=1), 1.0)
        assert np.all((tree.proba >= 0) & (tree.proba <= 1))


def test_rejects_unknown_format():
    text = forest_of(0.5).to_json().replace('"format_version":1', '"format_version":99')
    with pytest.raises(ValueError):
        RandomForestModel.from_json(text)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_predictions_are_probabilities(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 4))
    y = rng.integers(0, 2, 30)
    y[:2] = [0, 1]
    model = train_random_forest(LabeledDataset(X, y), ForestConfig(n_trees=5, seed=seed))
    p = model.predict_proba(rng.standard_normal((50, 4)) * 10)
    assert np.all((p >= 0) & (p <= 1))


# -- patient aggregation -----------------------------------------------------

def test_aggregate_hand_values():
    assert aggregate_patient([0.9, 0.3], 2) == pytest.approx(0.75, abs=1e-12)
    assert aggregate_patient([0.9, 0.3] * 4, 2) == pytest.approx(0.66, abs=1e-12)


@pytest.mark.parametrize("n, c", [(1, 0.1), (7, 2.0), (100, 33.0)])
def test_aggregate_all_half(n, c):
    assert aggregate_patient([0.5] * n, c) == pytest.approx(0.5, abs=1e-15)


def test_aggregate_limits():
    s = [0.9, 0.3]
    assert aggregate_patient(s, 1e9) == pytest.approx(0.9, abs=1e-6)
    big = np.tile(s, 500_000)
    assert aggregate_patient(big, 1.0) == pytest.approx(0.6, abs=1e-6)


def test_aggregate_errors():
    with pytest.raises(EmptyScores):
        aggregate_patient([])
    for c in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(BadC):
            aggregate_patient([0.5], c)
    with pytest.raises(ValueError):
        aggregate_patient([1.5])


def test_patient_aggregate_record():
    agg = patient_aggregate([0.9, 0.3], 2.0, "s1")
    assert (agg.n, agg.p_max, agg.p_mean) == (2, 0.9, pytest.approx(0.6))
    assert agg.weight_max == 0.5


scores_st = st.lists(st.floats(0, 1), min_size=1, max_size=40)


@settings(max_examples=300, deadline=None)
@given(scores_st, st.floats(1e-3, 1e3))
def test_aggregate_is_convex_combination(scores, c):
    out = aggregate_patient(scores, c)
    eps = 1e-12
    assert np.mean(scores) - eps <= out <= max(scores) + eps


@settings(max_examples=100, deadline=None)
@given(scores_st, st.floats(1e-3, 1e3), st.randoms())
def test_aggregate_permutation_invariant(scores, c, rnd):
    shuffled = list(scores)
    rnd.shuffle(shuffled)
    assert aggregate_patient(shuffled, c) == pytest.approx(aggregate_patient(scores, c), abs=1e-12)


# -- fusion ------------------------------------------------------------------

def _voice(a, b, c):
    return {"mfcc": a, "egemaps": b, "vg": c}


def test_fusion_examples():
    assert fuse_scores(_voice(0.5, 0.5, 0.5), 0.5) == (0.5, 1)
    final, label = fuse_scores(_voice(0.6, 0.6, 0.6), 1.0)
    assert final == pytest.approx(0.8) and label == 1
    final, label = fuse_scores(_voice(0.2, 0.4, 0.6), 0.0)
    assert final == pytest.approx(0.2) and label == 0
    assert label_of(0.5) == 1 and label_of(0.4999999) == 0


def test_fusion_missing_and_untrained():
    with pytest.raises(MissingScore):
        fuse_scores({"mfcc": 0.5, "vg": 0.5}, 0.5)
    with pytest.raises(MissingScore):
        fuse_scores(_voice(0.5, 0.5, 0.5), None)
    with pytest.raises(UntrainedFusion):
        fuse_scores(_voice(0.5, 0.5, 0.5), 0.5, "forest")


def test_fusion_forest_strategy():
    model = forest_of(0.3, 0.5, n_features=2)
    final, label = fuse_scores(_voice(0.9, 0.9, 0.9), 0.9, "forest", model)
    assert final == pytest.approx(0.4) and label == 0


def test_fusion_family_subset():
    final, _ = fuse_scores({"mfcc": 0.2, "vg": 0.6}, 0.0, families=("mfcc", "vg"))
    assert final == pytest.approx(0.2)


probs = st.floats(0, 1)


@settings(max_examples=200, deadline=None)
@given(st.lists(probs, min_size=4, max_size=4), st.integers(0, 3), probs)
def test_fusion_label_monotone(vals, which, bump):
    base = fuse_scores(_voice(*vals[:3]), vals[3])[1]
    up = list(vals)
    up[which] = max(up[which], bump)
    assert fuse_scores(_voice(*up[:3]), up[3])[1] >= base


# -- metrics -----------------------------------------------------------------

def test_f1_matches_reported_fusion_row():
    # 7 true positives, 3 false positives, no misses: precision 0.7, recall 1.0.
    m = evaluate([1] * 10 + [0] * 5, [1] * 7 + [0] * 3 + [0] * 5)
    assert (m.precision, m.recall) == (0.7, 1.0)
    assert m.f1 == pytest.approx(0.8235, abs=5e-4)
    assert round(100 * m.f1, 1) == 82.4
    assert f1_from(0.7, 1.0) == pytest.approx(14 / 17, abs=1e-15)


def test_perfect_predictions():
    truth = [0, 1, 1, 0, 1]
    m = evaluate(truth, truth, truth)
    assert (m.accuracy, m.precision, m.recall, m.f1, m.roc_auc) == (1.0, 1.0, 1.0, 1.0, 1.0)


def test_auc_degenerate_and_lengths():
    with pytest.raises(DegenerateTruth):
        roc_auc([1, 1], [0.2, 0.4])
    assert evaluate([1, 1], [1, 1], [0.6, 0.7]).roc_auc is None
    with pytest.raises(LengthMismatch):
        evaluate([1, 0], [1])


def test_f1_zero_when_nothing_predicted():
    m = evaluate([0, 0, 0], [1, 0, 1])
    assert m.f1 == 0.0 and m.precision == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0])), min_size=2, max_size=50))
def test_auc_matches_mann_whitney(pairs):
    truth = [t for t, _ in pairs]
    if len(set(truth)) < 2:
        return
    scores = [s for _, s in pairs]
    assert roc_auc(truth, scores) == pytest.approx(mann_whitney_auc(truth, scores), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
def test_f1_identity(pairs):
    labels = [a for a, _ in pairs]
    truth = [b for _, b in pairs]
    m = evaluate(labels, truth)
    s = m.precision + m.recall
    expected = 2 * m.precision * m.recall / s if s > 0 else 0.0
    assert m.f1 == pytest.approx(expected, abs=1e-15)
    assert m.tp + m.fp + m.tn + m.fn == len(pairs)
