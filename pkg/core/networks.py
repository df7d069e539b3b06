# networks.py
#
# This module defines the two trainable graph classifiers:
#   GcnBaseline  - two graph-convolution layers, logits = Â relu(Â X W1 + b1) W2 + b2
#   MobGcnModel  - multiresolution network: a bottom GCN encoder, then for every resolution a
#                  Gumbel-softmax cluster assignment, graph coarsening and a middle encoder;
#                  the coarse latents are mapped back to the superpixels through the cumulative
#                  assignment product and concatenated before a final linear classifier.
# Both models keep their parameters as a dict of numpy arrays and replay their forward pass
# on a fresh Tape, so the training loop owns every parameter update.
#
# Usage: build_model(kind, in_dim, classes, ...) then model.forward(tape, X, GraphInputs.from_graph(g)).
#
# Helper modules: Uses numpy, core.tensor for differentiation, json for checkpoint manifests.

import json
import logging
import os
from dataclasses import dataclass

import numpy as np

from core.errors import ConfigError, DataError, ShapeError
from core.graph_builder import normalized_adjacency
from core.tensor import Tape

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GraphInputs:
    """Dense weight matrix A and its GCN propagation matrix Â, shared by every forward pass."""
    A: np.ndarray
    A_hat: np.ndarray

    @classmethod
    def from_graph(cls, graph):
        return cls.from_dense(graph.A)

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A, dtype=np.float64)
        return cls(A=A, A_hat=normalized_adjacency(A))

    @property
    def n(self):
        return self.A.shape[0]


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _linear(tape, x, p, prefix):
    return tape.add(tape.matmul(x, p[f"{prefix}.W"]), p[f"{prefix}.b"])


def _check_input(X, inputs, in_dim):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != in_dim:
        raise ShapeError(f"expected node features with {in_dim} columns, got shape {X.shape}")
    if X.shape[0] != inputs.n:
        raise ShapeError(f"{X.shape[0]} feature rows for a {inputs.n}-node graph")
    return X


def gumbel_softmax_node(tape, logits, temperature, mode, rng):
    """
    Soft cluster assignment on a tape. In train mode Gumbel(0, 1) noise drawn from rng is added
    to the logits and treated as a constant; eval mode is noise-free.
    """
    if temperature <= 0:
        raise ConfigError("temperature must be > 0")
    if mode == "train":
        if rng is None:
            raise ConfigError("train-mode Gumbel sampling needs an rng")
        noise = rng.gumbel(0.0, 1.0, size=logits.shape)
        logits = tape.add(logits, tape.constant(noise))
    elif mode != "eval":
        raise ConfigError(f"unknown mode '{mode}'")
    return tape.row_softmax(tape.scalar_mul(logits, 1.0 / temperature))


def gumbel_softmax(logits, temperature, mode="eval", rng=None):
    """Row-stochastic n x k assignment from n x k logits (see gumbel_softmax_node)."""
    tape = Tape()
    return gumbel_softmax_node(tape, tape.constant(logits), temperature, mode, rng).value.copy()


def coarsen_nodes(tape, assign, L, A, normalize=True):
    """X' = rownorm(assignᵀ L), A' = symnorm(assignᵀ A assign); the diagonal of A' is kept."""
    assign_t = tape.transpose(assign)
    X_coarse = tape.matmul(assign_t, L)
    A_coarse = tape.matmul(tape.matmul(assign_t, A), assign)
    if normalize:
        X_coarse = tape.row_l2_normalize(X_coarse)
        A_coarse = tape.sym_degree_normalize(A_coarse)
    return X_coarse, A_coarse


def coarsen(assign, L, A, normalize=True):
    """numpy front-end of coarsen_nodes: returns (X' k x h, A' k x k)."""
    assign, L, A = (np.asarray(m, dtype=np.float64) for m in (assign, L, A))
    if assign.shape[0] != L.shape[0] or A.shape != (assign.shape[0], assign.shape[0]):
        raise ShapeError(f"coarsen shapes assign {assign.shape}, L {L.shape}, A {A.shape}")
    tape = Tape()
    X_coarse, A_coarse = coarsen_nodes(tape, tape.constant(assign), tape.constant(L), tape.constant(A), normalize)
    return X_coarse.value.copy(), A_coarse.value.copy()


class GcnBaseline:
    """
    Single-scale two-layer graph convolutional network.
    """
    kind = "gcn"

    def __init__(self, in_dim, hidden, classes, seed=0):
        self.in_dim, self.hidden, self.classes, self.seed = int(in_dim), int(hidden), int(classes), int(seed)
        rng = np.random.default_rng(seed)
        self.params = {
            "gc1.W": glorot(rng, self.in_dim, self.hidden),
            "gc1.b": np.zeros((1, self.hidden)),
            "gc2.W": glorot(rng, self.hidden, self.classes),
            "gc2.b": np.zeros((1, self.classes)),
        }

    def forward(self, tape, X, inputs, mode="eval", rng=None, trace=None):
        X = _check_input(X, inputs, self.in_dim)
        p = {name: tape.parameter(name, value) for name, value in self.params.items()}
        A_hat = tape.constant(inputs.A_hat)
        h = tape.relu(_linear(tape, tape.matmul(A_hat, X), p, "gc1"))
        return _linear(tape, tape.matmul(A_hat, h), p, "gc2")

    def manifest(self):
        return {"kind": self.kind, "in_dim": self.in_dim, "hidden": self.hidden, "classes": self.classes,
                "seed": self.seed}


class MobGcnModel:
    """
    Multiresolution graph network over the superpixel graph.

    Attributes:
        resolutions (list): Cluster count per level (may be empty).
        temperature (float): Gumbel-softmax temperature τ (constant over training).
        use_norm (bool): Row-l2-normalize every latent before concatenation.
        coarsen_norm (bool): Row-l2-normalize the coarse features and symmetrically
                             degree-normalize the coarse adjacency.
    """
    kind = "mobgcn"

    def __init__(self, in_dim, hidden, classes, resolutions, temperature=1.0, use_norm=True, seed=0,
                 coarsen_norm=True):
        self.in_dim, self.hidden, self.classes = int(in_dim), int(hidden), int(classes)
        self.resolutions = [int(r) for r in resolutions]
        if any(r < 2 for r in self.resolutions):
            raise ConfigError(f"resolutions must be >= 2, got {self.resolutions}")
        if temperature <= 0:
            raise ConfigError("temperature must be > 0")
        self.temperature = float(temperature)
        self.use_norm = bool(use_norm)
        self.coarsen_norm = bool(coarsen_norm)
        self.seed = int(seed)
        rng = np.random.default_rng(seed)
        h = self.hidden
        params = {"bottom.W": glorot(rng, self.in_dim, h), "bottom.b": np.zeros((1, h))}
        for level, r in enumerate(self.resolutions):
            params[f"pool{level}.W"] = glorot(rng, h, r)
            params[f"pool{level}.b"] = np.zeros((1, r))
            params[f"encoder{level}.W"] = glorot(rng, h, h)
            params[f"encoder{level}.b"] = np.zeros((1, h))
        width = h * (len(self.resolutions) + 1)
        params["final.W"] = glorot(rng, width, self.classes)
        params["final.b"] = np.zeros((1, self.classes))
        self.params = params

    @property
    def concat_width(self):
        return self.hidden * (len(self.resolutions) + 1)

    def forward(self, tape, X, inputs, mode="eval", rng=None, trace=None):
        """
        Record the multiresolution forward pass on `tape` and return the n x c logits node.
        If `trace` is a list, one dict per level with the numpy "assign", "product" and coarse
        "adjacency" matrices is appended to it.
        """
        X = _check_input(X, inputs, self.in_dim)
        p = {name: tape.parameter(name, value) for name, value in self.params.items()}
        A_hat = tape.constant(inputs.A_hat)
        L = tape.relu(_linear(tape, tape.matmul(A_hat, X), p, "bottom"))
        latents = [L]
        A = tape.constant(inputs.A)
        product = None
        for level, r in enumerate(self.resolutions):
            if r > L.rows:
                raise ConfigError(f"resolution {r} at level {level} exceeds the {L.rows} nodes available")
            assign = gumbel_softmax_node(tape, _linear(tape, L, p, f"pool{level}"), self.temperature, mode, rng)
            product = assign if product is None else tape.matmul(product, assign)
            X_coarse, A = coarsen_nodes(tape, assign, L, A, self.coarsen_norm)
            L = tape.relu(_linear(tape, tape.matmul(A, X_coarse), p, f"encoder{level}"))
            latents.append(tape.matmul(product, L))
            if trace is not None:
                trace.append({"assign": assign.value.copy(), "product": product.value.copy(),
                              "adjacency": A.value.copy()})
        if self.use_norm:
            latents = [tape.row_l2_normalize(latent) for latent in latents]
        representation = tape.concat_cols(latents)
        return _linear(tape, representation, p, "final")

    def manifest(self):
        return {"kind": self.kind, "in_dim": self.in_dim, "hidden": self.hidden, "classes": self.classes,
                "resolutions": self.resolutions, "temperature": self.temperature,
                "use_norm": self.use_norm, "coarsen_norm": self.coarsen_norm, "seed": self.seed}


def build_model(kind, in_dim, classes, hidden=32, resolutions=None, temperature=1.0, use_norm=True, seed=0,
                coarsen_norm=True):
    if kind == "gcn":
        return GcnBaseline(in_dim, hidden, classes, seed=seed)
    if kind == "mobgcn":
        if resolutions is None:
            resolutions = [classes]
        return MobGcnModel(in_dim, hidden, classes, resolutions, temperature, use_norm, seed=seed,
                           coarsen_norm=coarsen_norm)
    raise ConfigError(f"model kind '{kind}' has no trainable network")


def gcn_forward(X, A_hat, model):
    """Eval-mode logits of a GcnBaseline for a given propagation matrix Â."""
    A_hat = np.asarray(A_hat, dtype=np.float64)
    inputs = GraphInputs(A=np.zeros_like(A_hat), A_hat=A_hat)
    return model.forward(Tape(), X, inputs).value.copy()


def mobgcn_forward(X, A_dense, model, mode="eval", rng=None):
    """Logits of a MobGcnModel for a dense weight matrix."""
    return model.forward(Tape(), X, GraphInputs.from_dense(A_dense), mode, rng).value.copy()


def parameter_count(model):
    return int(sum(value.size for value in model.params.values()))


def save_checkpoint(model, directory):
    """One NPY file per parameter plus manifest.json (architecture, seed, parameter shapes)."""
    os.makedirs(directory, exist_ok=True)
    for name, value in model.params.items():
        np.save(os.path.join(directory, f"{name}.npy"), value)
    manifest = dict(model.manifest())
    manifest["shapes"] = {name: list(value.shape) for name, value in model.params.items()}
    with open(os.path.join(directory, "manifest.json"), "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
    return directory


def load_checkpoint(directory):
    with open(os.path.join(directory, "manifest.json"), "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    model = build_model(manifest["kind"], manifest["in_dim"], manifest["classes"], hidden=manifest["hidden"],
                        resolutions=manifest.get("resolutions"), temperature=manifest.get("temperature", 1.0),
                        use_norm=manifest.get("use_norm", True), seed=manifest["seed"],
                        coarsen_norm=manifest.get("coarsen_norm", True))
    for name, shape in manifest["shapes"].items():
        value = np.load(os.path.join(directory, f"{name}.npy"), allow_pickle=False)
        if list(value.shape) != shape:
            raise DataError(f"checkpoint parameter '{name}' has shape {value.shape}, manifest says {shape}")
        model.params[name] = value
    return model
