# training.py
#
# This module covers everything between the graph and the accuracy report:
# stratified sampling of training pixels, the consistency-regularised training loss
# (masked cross-entropy plus a degree-normalised smoothness term over graph edges),
# the Adam training loop shared by every trainable model, and prediction of the pixel map.
#
# Usage:
#   train_mask = sample_training_pixels(gt, split)
#   seeds = seed_labels(seg, gt, train_mask)
#   result = train(model, graph, X, seeds, train_config)
#   pred_map = predict_pixels(result.model, graph, X, seg)
#
# Helper modules: Uses numpy, core.tensor for gradients, time for wall-clock timings.

import logging
import math
import time

import numpy as np

from core.activity_logger import ActivityLogger
from core.errors import DataError, DivergenceError, ShapeError
from core.label_propagation import LgcPropagation
from core.networks import GraphInputs
from core.tensor import Tape, adam_init, adam_step, gradient
from models.reports import TrainResult
from utils.config import AppConfig

logger = logging.getLogger(__name__)


def sample_training_pixels(gt, split):
    """
    Pick ceil(fraction * count) training pixels per class, uniformly without replacement.

    Returns:
        np.ndarray: height x width boolean training mask (never selects unlabelled pixels).
    """
    rng = np.random.default_rng(split.seed)
    flat = gt.labels.ravel()
    mask = np.zeros(flat.shape, dtype=bool)
    if split.stratified:
        for cls in range(1, gt.class_count + 1):
            pool = np.flatnonzero(flat == cls)
            if len(pool) == 0:
                logger.warning("Class %d has no labelled pixels; skipped when sampling", cls)
                ActivityLogger().log_activity("seeds", "warning", target=f"class {cls}",
                                              details={"reason": "no labelled pixels"})
                continue
            take = min(len(pool), math.ceil(round(split.fraction * len(pool), 9)))
            mask[rng.choice(pool, size=take, replace=False)] = True
    else:
        pool = np.flatnonzero(flat > 0)
        take = min(len(pool), math.ceil(round(split.fraction * len(pool), 9)))
        mask[rng.choice(pool, size=take, replace=False)] = True
    return mask.reshape(gt.labels.shape)


def held_out_pixels(gt, train_mask):
    """Labelled pixels outside the training mask."""
    return gt.labeled_mask() & ~np.asarray(train_mask, dtype=bool)


def _undirected_edges(A):
    rows, cols = np.nonzero(np.triu(A, k=1))
    return rows, cols


def lgc_loss_terms(tape, logits, A, Y, train_mask, eps=1e-12):
    """
    Return the (supervised, smoothness) loss nodes.
    The supervised term averages -sum Y log softmax over the seeded rows (all rows when none
    are seeded); the smoothness term averages ||ŷn_i - ŷn_j||^2 over undirected edges, where
    ŷn = D^-1/2 softmax(logits).
    """
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    train_mask = np.asarray(train_mask, dtype=bool)
    n, c = logits.shape
    if A.shape != (n, n) or Y.shape != (n, c) or train_mask.shape != (n,):
        raise ShapeError(f"loss operands disagree: logits {logits.shape}, A {A.shape}, Y {Y.shape}")

    probs = tape.row_softmax(logits)
    rows = np.flatnonzero(train_mask)
    if len(rows) == 0:
        rows = np.arange(n)
    picked = tape.gather_rows(tape.log(probs), rows)
    cross = tape.sum(tape.elementwise_mul(picked, tape.constant(Y[rows])))
    supervised = tape.scalar_mul(cross, -1.0 / len(rows))

    i, j = _undirected_edges(A)
    if len(i) == 0:
        return supervised, tape.constant(0.0)
    inv_sqrt = 1.0 / np.sqrt(np.maximum(A.sum(axis=1), eps))
    scaled = tape.elementwise_mul(probs, tape.constant(np.repeat(inv_sqrt[:, None], c, axis=1)))
    diff = tape.sub(tape.gather_rows(scaled, i), tape.gather_rows(scaled, j))
    smooth = tape.scalar_mul(tape.sum(tape.elementwise_mul(diff, diff)), 1.0 / len(i))
    return supervised, smooth


def lgc_loss(tape, logits, A, Y, train_mask, mu):
    """L_sup + mu * L_smooth as a 1 x 1 tape node."""
    supervised, smooth = lgc_loss_terms(tape, logits, A, Y, train_mask)
    return tape.add(supervised, tape.scalar_mul(smooth, mu))


def _graph_inputs(graph):
    if isinstance(graph, GraphInputs):
        return graph
    return GraphInputs.from_graph(graph)


def train(model, graph, X, seeds, cfg):
    """
    Fit a model on the seeded superpixels.

    Every epoch replays the forward pass on a fresh tape in train mode, evaluates the loss,
    and applies one Adam step. The Gumbel noise rng is a child stream of cfg.seed, so it never
    replays the uniforms a model initialised with the same seed drew for its weights.

    Raises:
        DivergenceError: the loss became NaN or infinite.
    """
    inputs = _graph_inputs(graph)
    started = time.perf_counter()
    if isinstance(model, LgcPropagation):
        model.fit(inputs.A, seeds)
        return TrainResult(model=model, train_seconds=time.perf_counter() - started)

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0])
    state = adam_init(model.params)
    trace = []
    for epoch in range(int(cfg.epochs)):
        tape = Tape()
        logits = model.forward(tape, X, inputs, mode="train", rng=rng)
        loss = lgc_loss(tape, logits, inputs.A, seeds.Y, seeds.train_mask, cfg.mu)
        value = float(loss.value[0, 0])
        if not np.isfinite(value):
            ActivityLogger().log_activity("train", "error", details={"epoch": epoch, "loss": str(value)})
            raise DivergenceError(f"loss became {value} at epoch {epoch} (lr={cfg.learning_rate})")
        grads = gradient(tape, loss)
        model.params, state = adam_step(model.params, grads, state, cfg.learning_rate,
                                        AppConfig.ADAM_BETA1, AppConfig.ADAM_BETA2, AppConfig.ADAM_EPS)
        trace.append(value)
    elapsed = time.perf_counter() - started
    if trace:
        logger.info("Trained %s for %d epochs: loss %.6f -> %.6f (%.2fs)", model.kind, len(trace), trace[0],
                    trace[-1], elapsed)
    return TrainResult(model=model, loss_trace=trace, train_seconds=elapsed)


def superpixel_scores(model, graph, X):
    """Eval-mode n x c scores of a trained model."""
    if isinstance(model, LgcPropagation):
        if model.scores is None:
            raise DataError("label propagation has not been fitted")
        return model.scores
    return model.forward(Tape(), X, _graph_inputs(graph), mode="eval").value


def predict_superpixels(model, graph, X):
    """Class ids 1..c per superpixel; argmax ties go to the smallest class id."""
    return np.argmax(superpixel_scores(model, graph, X), axis=1) + 1


def predict_pixels(model, graph, X, seg):
    """Every pixel inherits the predicted class of its superpixel."""
    labels = predict_superpixels(model, graph, X)
    if len(labels) != seg.n:
        raise ShapeError(f"{len(labels)} predictions for {seg.n} superpixels")
    return labels[seg.segment_id].astype(np.int32)
