import logging

import numpy as np
import pytest

from conftest import assert_gradients_close, numeric_gradient
from core.errors import ConfigError, DataError, DivergenceError
from core.label_propagation import LgcPropagation, lgc_closed_form, lgc_propagate
from core.networks import GcnBaseline, GraphInputs, MobGcnModel
from core.tensor import Tape, gradient
from core.training import (held_out_pixels, lgc_loss, lgc_loss_terms, predict_pixels, predict_superpixels,
                           sample_training_pixels, train)
from models.config import SplitSpec, TrainConfig
from models.cube import GroundTruth
from models.features import SeedLabels
from models.graph import SpatialGraph
from models.segmentation import Segmentation

PATH = np.array([[0, 1, 0, 0],
                 [1, 0, 2, 0],
                 [0, 2, 0, 1],
                 [0, 0, 1, 0]], dtype=float)


def _softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _loss_by_hand(logits, A, Y, mask, mu):
    probs = _softmax(logits)
    rows = np.flatnonzero(mask) if mask.any() else np.arange(len(mask))
    supervised = -np.sum(Y[rows] * np.log(probs[rows])) / len(rows)
    scaled = probs / np.sqrt(A.sum(axis=1))[:, None]
    edges = [(i, j) for i in range(len(A)) for j in range(i + 1, len(A)) if A[i, j] > 0]
    smooth = sum(np.sum((scaled[i] - scaled[j]) ** 2) for i, j in edges) / len(edges)
    return supervised + mu * smooth


@pytest.fixture
def path_problem():
    logits = np.array([[2.0, -1.0], [0.5, 0.3], [-0.2, 1.1], [0.0, 3.0]])
    Y = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]])
    return logits, Y, Y.sum(axis=1) > 0


# --- sampling ---

def test_ceiling_gives_one_pixel_for_small_classes():
    labels = np.zeros((10, 10), dtype=int)
    labels[:2, :] = 1
    labels[5:, :] = 2
    mask = sample_training_pixels(GroundTruth(labels), SplitSpec(fraction=0.05, seed=3))
    assert mask[labels == 1].sum() == 1
    assert mask[labels == 2].sum() == 3
    assert not mask[labels == 0].any()


def test_sampling_is_deterministic_per_seed(small_scene):
    _, gt = small_scene
    a = sample_training_pixels(gt, SplitSpec(fraction=0.1, seed=5))
    b = sample_training_pixels(gt, SplitSpec(fraction=0.1, seed=5))
    c = sample_training_pixels(gt, SplitSpec(fraction=0.1, seed=6))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_full_fraction_leaves_an_empty_test_set(small_scene):
    _, gt = small_scene
    mask = sample_training_pixels(gt, SplitSpec(fraction=1.0, seed=0))
    np.testing.assert_array_equal(mask, gt.labeled_mask())
    assert not held_out_pixels(gt, mask).any()


def test_empty_class_is_skipped_with_warning(caplog):
    gt = GroundTruth(np.array([[1, 1, 3, 3]]), class_count=3)
    with caplog.at_level(logging.WARNING):
        mask = sample_training_pixels(gt, SplitSpec(fraction=0.5, seed=0))
    assert mask.sum() == 2
    assert "Class 2" in caplog.text


def test_unstratified_sampling_counts_all_labelled_pixels():
    labels = np.array([[1, 1, 1, 2, 0, 0]])
    mask = sample_training_pixels(GroundTruth(labels), SplitSpec(fraction=0.5, seed=1, stratified=False))
    assert mask.sum() == 2
    assert not mask[labels == 0].any()


def test_held_out_pixels_exclude_training_and_unlabelled():
    gt = GroundTruth(np.array([[0, 1, 2]]))
    np.testing.assert_array_equal(held_out_pixels(gt, np.array([[False, True, False]])), [[False, False, True]])


# --- loss ---

def test_loss_matches_hand_evaluation(path_problem):
    logits, Y, mask = path_problem
    tape = Tape()
    loss = lgc_loss(tape, tape.constant(logits), PATH, Y, mask, mu=0.7)
    assert loss.value[0, 0] == pytest.approx(_loss_by_hand(logits, PATH, Y, mask, 0.7), abs=1e-9)


def test_zero_mu_is_plain_cross_entropy(path_problem):
    logits, Y, mask = path_problem
    tape = Tape()
    loss = lgc_loss(tape, tape.constant(logits), PATH, Y, mask, mu=0.0)
    probs = _softmax(logits)
    expected = -(np.log(probs[0, 0]) + np.log(probs[3, 1])) / 2
    assert loss.value[0, 0] == pytest.approx(expected, abs=1e-12)


def test_constant_predictions_on_regular_graph_are_smooth():
    cycle = np.roll(np.eye(4), 1, axis=1)
    cycle = cycle + cycle.T
    logits = np.tile([[0.3, -0.4, 1.0]], (4, 1))
    tape = Tape()
    _, smooth = lgc_loss_terms(tape, tape.constant(logits), cycle, np.zeros((4, 3)), np.zeros(4, dtype=bool))
    assert smooth.value[0, 0] == pytest.approx(0.0, abs=1e-15)


def test_empty_train_mask_falls_back_to_all_rows(path_problem):
    logits, Y, _ = path_problem
    empty = np.zeros(4, dtype=bool)
    tape = Tape()
    supervised, _ = lgc_loss_terms(tape, tape.constant(logits), PATH, Y, empty)
    probs = _softmax(logits)
    assert supervised.value[0, 0] == pytest.approx(-(np.log(probs[0, 0]) + np.log(probs[3, 1])) / 4)


def test_loss_gradient_matches_finite_differences(path_problem):
    logits, Y, mask = path_problem

    def build(value):
        tape = Tape()
        return tape, lgc_loss(tape, tape.parameter("logits", value), PATH, Y, mask, mu=2.0)

    tape, loss = build(logits)
    analytic = gradient(tape, loss)["logits"]
    numeric = numeric_gradient(lambda v: build(v)[1].value[0, 0], logits)
    assert_gradients_close(analytic, numeric)


# --- training loop ---

def _two_node_problem():
    A = np.array([[0.0, 0.1], [0.1, 0.0]])
    X = np.eye(2)
    seeds = SeedLabels(Y=np.eye(2), train_mask=np.array([True, True]))
    return GraphInputs.from_dense(A), X, seeds


def test_two_node_toy_is_learned():
    inputs, X, seeds = _two_node_problem()
    model = GcnBaseline(2, 4, 2, seed=0)
    result = train(model, inputs, X, seeds, TrainConfig(mu=0.01, epochs=200, learning_rate=0.05, seed=0))
    np.testing.assert_array_equal(predict_superpixels(result.model, inputs, X), [1, 2])
    assert len(result.loss_trace) == 200
    assert result.loss_trace[-1] < result.loss_trace[0]


def test_mobgcn_trains_and_is_deterministic(planted_graph):
    X = np.repeat(np.eye(2), 4, axis=0)
    Y = np.zeros((8, 2))
    Y[0, 0] = Y[7, 1] = 1.0
    seeds = SeedLabels(Y=Y, train_mask=Y.sum(axis=1) > 0)
    cfg = TrainConfig(mu=0.01, epochs=60, learning_rate=0.02, seed=4)
    first = train(MobGcnModel(2, 6, 2, [2], seed=1), GraphInputs.from_dense(planted_graph), X, seeds, cfg)
    second = train(MobGcnModel(2, 6, 2, [2], seed=1), GraphInputs.from_dense(planted_graph), X, seeds, cfg)
    assert first.loss_trace == second.loss_trace
    assert np.all(np.isfinite(first.loss_trace))


def test_loss_settles_over_the_last_epochs(planted_graph):
    X = np.repeat(np.eye(2), 4, axis=0)
    train_mask = np.zeros(8, dtype=bool)
    train_mask[[0, 7]] = True
    seeds = SeedLabels(Y=X.copy(), train_mask=train_mask)
    result = train(GcnBaseline(2, 8, 2, seed=0), GraphInputs.from_dense(planted_graph), X, seeds,
                   TrainConfig(mu=0.01, epochs=300, learning_rate=0.01, seed=0))
    smoothed = np.convolve(result.loss_trace, np.ones(5) / 5, mode="valid")
    assert np.all(np.diff(smoothed[-50:]) <= 1e-9)


class _RecordingModel:
    """Linear logits; remembers the generator state handed to each train-mode forward pass."""
    kind = "recording"

    def __init__(self):
        self.params = {"w": np.eye(2)}
        self.states = []

    def forward(self, tape, X, inputs, mode="eval", rng=None, trace=None):
        self.states.append(rng.bit_generator.state["state"])
        return tape.matmul(tape.constant(X), tape.parameter("w", self.params["w"]))


def test_noise_stream_differs_from_the_init_stream():
    inputs, X, seeds = _two_node_problem()
    model = _RecordingModel()
    train(model, inputs, X, seeds, TrainConfig(epochs=2, seed=5))
    assert model.states[0] != np.random.default_rng(5).bit_generator.state["state"]
    again = _RecordingModel()
    train(again, inputs, X, seeds, TrainConfig(epochs=2, seed=5))
    assert again.states == model.states


def test_zero_epochs_return_the_initial_model():
    inputs, X, seeds = _two_node_problem()
    model = GcnBaseline(2, 4, 2, seed=0)
    before = {name: value.copy() for name, value in model.params.items()}
    result = train(model, inputs, X, seeds, TrainConfig(epochs=0))
    assert result.loss_trace == []
    for name, value in before.items():
        np.testing.assert_array_equal(result.model.params[name], value)
    with pytest.raises(ConfigError):
        TrainConfig(epochs=-1).validate()


class _SteepModel:
    """Logits = 1e300 * X W; one large step overflows them."""
    kind = "steep"

    def __init__(self):
        self.params = {"w": np.ones((2, 2))}

    def forward(self, tape, X, inputs, mode="eval", rng=None, trace=None):
        return tape.scalar_mul(tape.matmul(X, tape.parameter("w", self.params["w"])), 1e300)


def test_divergence_is_reported():
    inputs, X, seeds = _two_node_problem()
    with np.errstate(all="ignore"), pytest.raises(DivergenceError):
        train(_SteepModel(), inputs, X, seeds, TrainConfig(epochs=5, learning_rate=1e10))


# --- label propagation and prediction ---

def test_label_propagation_spreads_each_seed_through_its_cluster(planted_graph):
    Y = np.zeros((8, 2))
    Y[0, 0] = Y[7, 1] = 1.0
    seeds = SeedLabels(Y=Y, train_mask=Y.sum(axis=1) > 0)
    model = LgcPropagation(mu=0.01)
    result = train(model, SpatialGraph(planted_graph), None, seeds, TrainConfig())
    assert result.loss_trace == []
    np.testing.assert_array_equal(predict_superpixels(model, None, None), [1, 1, 1, 1, 2, 2, 2, 2])
    np.testing.assert_array_equal(lgc_propagate(planted_graph, Y, alpha=0.0), Y)
    with pytest.raises(ConfigError):
        lgc_propagate(planted_graph, Y, alpha=1.0)


def test_label_propagation_reaches_the_closed_form_fixed_point(planted_graph):
    Y = np.zeros((8, 2))
    Y[0, 0] = Y[7, 1] = 1.0
    expected = lgc_closed_form(planted_graph, Y, alpha=1.0 / 1.01)
    np.testing.assert_allclose(lgc_propagate(planted_graph, Y, mu=0.01), expected, atol=1e-7)
    early = lgc_propagate(planted_graph, Y, mu=0.01, iterations=200)
    assert np.max(np.abs(early - expected)) > 1e-3


def test_unfitted_propagation_cannot_predict():
    with pytest.raises(DataError):
        predict_superpixels(LgcPropagation(), None, None)


def test_pixels_inherit_their_superpixel_class():
    seg = Segmentation(np.array([[0, 0, 1], [2, 2, 1]]))
    model = LgcPropagation()
    model.scores = np.array([[0.1, 0.5, 0.5],
                             [0.9, 0.0, 0.2],
                             [0.0, 0.0, 3.0]])
    pred = predict_pixels(model, None, None, seg)
    np.testing.assert_array_equal(pred, [[2, 2, 1], [3, 3, 1]])
    assert pred.dtype == np.int32
    model.scores = np.zeros((3, 3)) + [0.0, 0.0, 1.0]
    np.testing.assert_array_equal(predict_pixels(model, None, None, seg), 3)
