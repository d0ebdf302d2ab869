"""Learned normality scoring on top of a frozen classifier + decoder.

A trained joint model (classifier head plus reconstruction decoder) is
frozen, and a small sigmoid scorer is trained to tell clean examples
(label 1, "normal") from distorted ones (label 0, "abnormal"). The
scorer reads exactly two things per example: the elementwise squared
reconstruction residual and the softmax probability vector.

The scorer's output is a normality score in (0, 1); higher means the
input looks more like the data the backbone was trained on. Because the
scorer sees reconstruction quality, it can detect inputs the softmax
baseline stays confident on.
"""

from __future__ import annotations

import dataclasses
import json
from typing import Optional, Sequence, Union

import numpy as np

from . import nn
from .data import (
    Blur,
    ColoredNoise,
    Dataset,
    DistortionKind,
    GaussianNoise,
    Rotation,
    UniformNoise,
    distort,
)

__all__ = [
    "AbnormalityModule",
    "DistortionRange",
    "DEFAULT_IMAGE_DISTORTIONS",
    "build_module",
    "scorer_features",
    "make_abnormal_set",
    "train_scorer",
    "normality_score",
    "save_module",
    "load_module",
]

NORMAL_LABEL = 1
ABNORMAL_LABEL = 0

INPUT_RECIPE = "squared_residual+softmax_probs"

MODULE_FORMAT = 1


@dataclasses.dataclass(frozen=True)
class DistortionRange:
    """A distortion family whose strength is sampled per example.

    kind is one of "blur", "rotation", "gaussian-noise", "uniform-noise";
    the strength is drawn uniformly from [lo, hi]. For rotations,
    random_sign=True flips the sampled angle's sign with probability 1/2.
    """

    kind: str
    lo: float
    hi: float
    random_sign: bool = False

    def __post_init__(self):
        if self.kind not in ("blur", "rotation", "gaussian-noise", "uniform-noise"):
            raise ValueError(f"unknown distortion family: {self.kind!r}")
        if not 0 < self.lo <= self.hi:
            raise ValueError("need 0 < lo <= hi (zero-strength distortions excluded)")

    def sample(self, rng: np.random.Generator) -> DistortionKind:
        strength = float(rng.uniform(self.lo, self.hi))
        if self.kind == "blur":
            return Blur(sigma_px=strength)
        if self.kind == "rotation":
            if self.random_sign and rng.random() < 0.5:
                strength = -strength
            return Rotation(degrees=strength)
        if self.kind == "gaussian-noise":
            return GaussianNoise(sigma=strength)
        return UniformNoise(amplitude=strength)


DEFAULT_IMAGE_DISTORTIONS = (
    DistortionRange("blur", 0.5, 2.0),
    DistortionRange("rotation", 15.0, 60.0, random_sign=True),
    DistortionRange("gaussian-noise", 0.1, 0.5),
)


@dataclasses.dataclass
class AbnormalityModule:
    """Frozen backbone (classifier + decoder) plus a trainable scorer."""

    backbone: nn.Mlp
    scorer: list
    input_recipe: str
    backbone_checksum: str

    @property
    def feature_dim(self) -> int:
        return self.backbone.input_dim + self.backbone.class_count


def build_module(
    trained_backbone: nn.Mlp,
    scorer_widths: Sequence[int] = (128,),
    seed: int = 0,
) -> AbnormalityModule:
    """Freeze a jointly trained backbone and attach a fresh sigmoid scorer.

    The scorer input is the concatenation of the squared reconstruction
    residual (input dimension) and the softmax probability vector (one
    per class); hidden layers are GELU, the output is a single sigmoid
    unit.
    """
    if not trained_backbone.has_decoder:
        raise ValueError("backbone needs a decoder head")
    feature_dim = trained_backbone.input_dim + trained_backbone.class_count
    seeds = iter(np.random.SeedSequence(seed).generate_state(len(scorer_widths) + 1))
    layers, fan_in = [], feature_dim
    for w in scorer_widths:
        weights, bias = nn.init_weights(fan_in, w, "gelu", int(next(seeds)))
        layers.append(nn.DenseLayer(weights=weights, bias=bias, activation="gelu"))
        fan_in = w
    weights, bias = nn.init_weights(fan_in, 1, "sigmoid", int(next(seeds)))
    layers.append(nn.DenseLayer(weights=weights, bias=bias, activation="sigmoid"))
    return AbnormalityModule(
        backbone=trained_backbone,
        scorer=layers,
        input_recipe=INPUT_RECIPE,
        backbone_checksum=nn.param_checksum(nn.parameters(trained_backbone)),
    )


def scorer_features(module: AbnormalityModule, inputs) -> np.ndarray:
    """(x - reconstruction)^2 concatenated with the softmax probabilities."""
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    probs, recon = nn.predict(module.backbone, x)
    residual = (x - recon) ** 2
    return np.concatenate([residual, probs], axis=1)


def make_abnormal_set(
    clean: Dataset,
    distortions: Sequence = DEFAULT_IMAGE_DISTORTIONS,
    seed: int = 0,
    image_shape: Optional[tuple] = None,
) -> Dataset:
    """Balanced binary set: each clean example once as normal (label 1)
    and once distorted (label 0).

    Entries of ``distortions`` are either DistortionRange families
    (strength sampled per example) or concrete distortion recipes
    applied as-is; the choice of entry is uniform per example, seeded.
    """
    if len(clean) == 0:
        raise ValueError("clean dataset is empty")
    if not distortions:
        raise ValueError("need at least one distortion")
    rng = np.random.default_rng(seed)
    n, d = clean.inputs.shape
    if image_shape is None:
        side = int(round(d**0.5))
        image_shape = (side, side) if side * side == d else None

    distorted = np.empty_like(clean.inputs)
    applied = []
    for i in range(n):
        entry = distortions[int(rng.integers(len(distortions)))]
        kind = entry.sample(rng) if isinstance(entry, DistortionRange) else entry
        sub_seed = int(rng.integers(0, 2**63 - 1))
        distorted[i] = distort(clean.inputs[i], kind, shape=image_shape, seed=sub_seed)
        applied.append(type(kind).__name__)

    inputs = np.vstack([clean.inputs, distorted])
    labels = np.concatenate(
        [np.full(n, NORMAL_LABEL, dtype=np.int64), np.full(n, ABNORMAL_LABEL, dtype=np.int64)]
    )
    return Dataset(
        inputs=inputs,
        labels=labels,
        class_count=2,
        provenance=f"{clean.provenance}/normal-vs-distorted",
        metadata={"applied_distortions": applied, "seed": seed},
    )


def _scorer_params(module: AbnormalityModule) -> dict:
    out = {}
    for i, layer in enumerate(module.scorer):
        out[f"scorer{i}.w"] = layer.weights
        out[f"scorer{i}.b"] = layer.bias
    return out


def _bce_and_grads(module, features, targets):
    """Forward + backward of binary cross-entropy through the sigmoid."""
    out, caches = nn.stack_forward(module.scorer, features)
    s = out[:, 0]
    batch = s.size
    eps = 1e-12
    bce = -float(np.mean(targets * np.log(s + eps) + (1 - targets) * np.log(1 - s + eps)))
    grads: dict = {}
    # through the output sigmoid, d(loss)/d(pre-activation) = (s - y) / B
    dz = ((s - targets) / batch)[:, None]
    last = len(module.scorer) - 1
    h_prev = caches[last][0]
    grads[f"scorer{last}.w"] = dz.T @ h_prev
    grads[f"scorer{last}.b"] = dz.sum(axis=0)
    d = dz @ module.scorer[last].weights
    if last > 0:
        nn.stack_backward(module.scorer[:last], caches[:last], d, grads, "scorer")
    return bce, grads


def train_scorer(
    module: AbnormalityModule,
    dataset: Dataset,
    epochs: int = 2,
    seed: int = 0,
    batch_size: int = 128,
    learning_rate: float = 1e-3,
):
    """Fit the sigmoid scorer with binary cross-entropy; backbone untouched.

    Features are computed once through the frozen backbone, then only
    scorer parameters receive Adam updates. The backbone checksum is
    asserted unchanged before and after. Defaults to 2 epochs.
    """
    if module.backbone_checksum != nn.param_checksum(nn.parameters(module.backbone)):
        raise AssertionError("backbone changed since the module was built")
    if dataset.labels is None or len(dataset) == 0:
        raise ValueError("need a non-empty labeled normal/abnormal dataset")
    if dataset.class_count != 2:
        raise ValueError("scorer training expects binary labels")

    features = scorer_features(module, dataset.inputs)
    targets = dataset.labels.astype(np.float64)
    params = _scorer_params(module)
    state = nn.AdamState.for_params(params, lr=learning_rate)
    rng = np.random.default_rng(seed)

    n = features.shape[0]
    log = []
    for epoch in range(epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            bce, grads = _bce_and_grads(module, features[idx], targets[idx])
            nn.adam_step(params, grads, state)
            total += bce * idx.size
        log.append({"epoch": epoch, "bce": total / n})

    assert module.backbone_checksum == nn.param_checksum(
        nn.parameters(module.backbone)
    ), "backbone changed during scorer training"
    return module, log


def normality_score(module: AbnormalityModule, inputs):
    """Sigmoid normality score in (0, 1); higher = more in-distribution.

    A single flat example gives a float; a batch gives a 1-D array.
    """
    x = np.asarray(inputs, dtype=np.float64)
    single = x.ndim == 1
    features = scorer_features(module, x)
    out, _ = nn.stack_forward(module.scorer, features)
    scores = out[:, 0]
    return float(scores[0]) if single else scores


# ---------------------------------------------------------------------------
# checkpointing


def save_module(module: AbnormalityModule, path):
    """JSON checkpoint: backbone, scorer, recipe; round trip bit-exact."""
    doc = {
        "format": MODULE_FORMAT,
        "kind": "abnormality",
        "input_recipe": module.input_recipe,
        "backbone_checksum": module.backbone_checksum,
        "backbone": {
            "hidden": [nn._layer_to_json(l) for l in module.backbone.hidden],
            "classifier": nn._layer_to_json(module.backbone.classifier),
            "decoder": [nn._layer_to_json(l) for l in module.backbone.decoder],
        },
        "scorer": [nn._layer_to_json(l) for l in module.scorer],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_module(path) -> AbnormalityModule:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != MODULE_FORMAT or doc.get("kind") != "abnormality":
        raise ValueError("unrecognized module checkpoint format")
    bb = doc["backbone"]
    backbone = nn.Mlp(
        hidden=[nn._layer_from_json(o) for o in bb["hidden"]],
        classifier=nn._layer_from_json(bb["classifier"]),
        decoder=[nn._layer_from_json(o) for o in bb["decoder"]],
    )
    return AbnormalityModule(
        backbone=backbone,
        scorer=[nn._layer_from_json(o) for o in doc["scorer"]],
        input_recipe=doc["input_recipe"],
        backbone_checksum=doc["backbone_checksum"],
    )
