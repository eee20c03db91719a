"""Structure network: the dilated residual CNN that produces the base image.

Topology: a 7-channel input (upsampled RGB + four component masks) enters a
7->64 conv, then five groups of five residual blocks with per-group
dilations 5, 4, 3, 2, 1 (two 64->64 convs per block, pad == dilation so
every feature map keeps the input's spatial size), a 64->64 fusion conv
whose output is added to the first conv's output (long-range skip), and a
64->3 reconstruction conv whose output is added to the RGB input channels
(global residual) and clamped to [0, 1]. 53 convolutions, 25 blocks.

Inference math runs in float64; weight files store float32 (see
``tensorio`` for the container format).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FaceRestoreError
from .face_masks import COMPONENT_NAMES, FacialMaskSet
from .image_core import ColorSpace, ImagePlane, ImageStack
from .tensorio import TensorFileError, read_tensors, write_tensors

__all__ = [
    "GROUP_DILATIONS",
    "BLOCKS_PER_GROUP",
    "LayerSpec",
    "FeatureMap",
    "StructureNet",
    "ShapeMismatchError",
    "MissingWeightsError",
    "build_structure_net",
    "dilated_conv",
    "euclidean_loss",
    "forward",
    "load_weights",
    "save_weights",
    "receptive_field",
]

GROUP_DILATIONS = (5, 4, 3, 2, 1)
BLOCKS_PER_GROUP = 5
FEATURES = 64
IN_CHANNELS = 3 + len(COMPONENT_NAMES)
OUT_CHANNELS = 3


class ShapeMismatchError(TensorFileError):
    """A stored tensor disagrees with the architecture; names the layer."""


class MissingWeightsError(FaceRestoreError):
    """forward() was called on a model without loaded weights."""


@dataclass(frozen=True)
class LayerSpec:
    name: str
    in_channels: int
    out_channels: int
    dilation: int
    activation: str  # "relu" or "none"
    pad: int | None = None  # defaults to the dilation (size-preserving)
    kind: str = "conv"
    kernel: int = 3
    has_bias: bool = True

    def __post_init__(self):
        if self.pad is None:
            object.__setattr__(self, "pad", self.dilation)
        if self.pad != self.dilation:
            raise ValueError(
                f"{self.name}: pad {self.pad} != dilation {self.dilation}; a 3x3 conv "
                "preserves the spatial size only when they match"
            )


@dataclass(frozen=True)
class FeatureMap:
    """(channels, height, width) activation tensor."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float64)
        if a.ndim != 3:
            raise ValueError(f"feature map must be 3-D, got shape {a.shape}")
        object.__setattr__(self, "data", a)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def _block_name(index: int) -> str:
    return f"res{index:02d}"


def build_layer_specs() -> tuple[LayerSpec, ...]:
    specs = [LayerSpec("entry", IN_CHANNELS, FEATURES, dilation=1, activation="relu")]
    block = 0
    for dilation in GROUP_DILATIONS:
        for _ in range(BLOCKS_PER_GROUP):
            block += 1
            name = _block_name(block)
            specs.append(LayerSpec(f"{name}a", FEATURES, FEATURES, dilation, "relu"))
            specs.append(LayerSpec(f"{name}b", FEATURES, FEATURES, dilation, "none"))
    specs.append(LayerSpec("fuse", FEATURES, FEATURES, dilation=1, activation="relu"))
    specs.append(LayerSpec("recon", FEATURES, OUT_CHANNELS, dilation=1, activation="none"))
    return tuple(specs)


@dataclass(frozen=True)
class StructureNet:
    """Layer graph plus (optionally) the tensors that parameterize it."""

    specs: tuple[LayerSpec, ...]
    weights: dict[str, np.ndarray] | None = None

    @property
    def n_layers(self) -> int:
        return len(self.specs)

    @property
    def n_blocks(self) -> int:
        return sum(1 for s in self.specs if s.name.endswith("a") and s.name.startswith("res"))

    def spec_by_name(self) -> dict[str, LayerSpec]:
        return {s.name: s for s in self.specs}

    def layer_tensors(self, name: str) -> tuple[np.ndarray, np.ndarray]:
        if self.weights is None:
            raise MissingWeightsError("model has no weights loaded")
        return self.weights[f"{name}.weight"], self.weights[f"{name}.bias"]


def build_structure_net(weights: dict[str, np.ndarray] | None = None) -> StructureNet:
    """The fixed architecture, optionally bound to a validated weight set."""
    net = StructureNet(build_layer_specs(), None)
    if weights is not None:
        _validate_weights(net, weights, source="<memory>")
        net = StructureNet(net.specs, dict(weights))
    return net


def receptive_field(net: StructureNet) -> int:
    """Receptive field of the stacked 3x3 convs: 1 + sum of 2*dilation."""
    return 1 + sum(2 * s.dilation for s in net.specs)


# ---------------------------------------------------------------------------
# Convolution and forward pass
# ---------------------------------------------------------------------------


def dilated_conv(
    x: FeatureMap, spec: LayerSpec, weight: np.ndarray, bias: np.ndarray | None = None
) -> FeatureMap:
    """3x3 convolution with zero padding ``spec.pad`` and dilated taps.

    Taps are applied in cross-correlation orientation, the usual CNN
    convention. The spatial size is preserved exactly.
    """
    if x.channels != spec.in_channels:
        raise ValueError(
            f"{spec.name}: expected {spec.in_channels} input channels, got {x.channels}"
        )
    weight = np.asarray(weight, dtype=np.float64)
    if weight.shape != (spec.out_channels, spec.in_channels, 3, 3):
        raise ValueError(f"{spec.name}: weight shape {weight.shape} does not match spec")
    d = spec.dilation
    c_in, h, w = x.data.shape
    padded = np.pad(x.data, ((0, 0), (d, d), (d, d)))
    cols = np.empty((c_in, 3, 3, h, w), dtype=np.float64)
    for ky in range(3):
        for kx in range(3):
            cols[:, ky, kx] = padded[:, ky * d : ky * d + h, kx * d : kx * d + w]
    out = weight.reshape(spec.out_channels, -1) @ cols.reshape(c_in * 9, h * w)
    out = out.reshape(spec.out_channels, h, w)
    if bias is not None:
        out += np.asarray(bias, dtype=np.float64)[:, None, None]
    return FeatureMap(out)


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def _apply(net: StructureNet, specs: dict[str, LayerSpec], name: str, x: FeatureMap) -> FeatureMap:
    spec = specs[name]
    weight, bias = net.layer_tensors(name)
    out = dilated_conv(x, spec, weight, bias)
    if out.data.shape[1:] != x.data.shape[1:]:
        raise FaceRestoreError(f"{name}: spatial size changed during convolution")
    if spec.activation == "relu":
        out = FeatureMap(_relu(out.data))
    return out


def forward(net: StructureNet, rgb_up: ImageStack, masks: FacialMaskSet) -> ImageStack:
    """Run the network on an upsampled RGB image and its component masks."""
    if net.weights is None:
        raise MissingWeightsError("load weights before calling forward()")
    if rgb_up.color_space is not ColorSpace.RGB:
        raise ValueError("forward expects an RGB stack")
    if masks.shape != (rgb_up.height, rgb_up.width):
        raise ValueError(
            f"mask dimensions {masks.shape} do not match image "
            f"{(rgb_up.height, rgb_up.width)}"
        )
    planes = [c.data for c in rgb_up.channels] + [m.data for m in masks]
    x = FeatureMap(np.stack(planes))
    specs = net.spec_by_name()

    h = _apply(net, specs, "entry", x)
    long_skip = h
    for i in range(1, 26):
        name = _block_name(i)
        t = _apply(net, specs, f"{name}a", h)
        t = _apply(net, specs, f"{name}b", t)
        h = FeatureMap(t.data + h.data)
    t = _apply(net, specs, "fuse", h)
    h = FeatureMap(t.data + long_skip.data)
    out = _apply(net, specs, "recon", h)

    rgb = np.stack([c.data for c in rgb_up.channels])
    base = out.data + rgb
    return ImageStack.from_array(base, ColorSpace.RGB, clamp=True)


def euclidean_loss(pred: ImageStack, gt: ImageStack) -> float:
    """Mean squared per-pixel difference over all channels."""
    if (pred.height, pred.width, len(pred.channels)) != (gt.height, gt.width, len(gt.channels)):
        raise ValueError("prediction and ground truth shapes differ")
    diff = pred.as_array() - gt.as_array()
    return float(np.mean(diff * diff))


# ---------------------------------------------------------------------------
# Weight file I/O
# ---------------------------------------------------------------------------


def _validate_weights(net: StructureNet, tensors: dict[str, np.ndarray], source: str) -> None:
    expected: dict[str, tuple[int, ...]] = {}
    for s in net.specs:
        expected[f"{s.name}.weight"] = (s.out_channels, s.in_channels, 3, 3)
        expected[f"{s.name}.bias"] = (s.out_channels,)
    for name, shape in expected.items():
        if name not in tensors:
            raise ShapeMismatchError(f"{source}: missing tensor {name!r}")
        got = tuple(tensors[name].shape)
        if got != shape:
            layer = name.split(".")[0]
            raise ShapeMismatchError(
                f"{source}: layer {layer!r} tensor {name!r} has shape {got}, expected {shape}"
            )
    extras = set(tensors) - set(expected)
    if extras:
        raise ShapeMismatchError(f"{source}: unexpected tensors {sorted(extras)}")


def load_weights(path) -> StructureNet:
    """Load and validate a weight file; preserves tensor order for re-save."""
    tensors = read_tensors(path)
    net = StructureNet(build_layer_specs(), None)
    _validate_weights(net, tensors, source=str(path))
    return StructureNet(net.specs, tensors)


def save_weights(net: StructureNet, path) -> None:
    if net.weights is None:
        raise MissingWeightsError("model has no weights to save")
    write_tensors(path, {k: np.asarray(v, dtype=np.float32) for k, v in net.weights.items()})


def zero_weights(net: StructureNet) -> StructureNet:
    """All-zero parameter set (the network then acts as the identity)."""
    tensors: dict[str, np.ndarray] = {}
    for s in net.specs:
        tensors[f"{s.name}.weight"] = np.zeros((s.out_channels, s.in_channels, 3, 3), np.float32)
        tensors[f"{s.name}.bias"] = np.zeros((s.out_channels,), np.float32)
    return StructureNet(net.specs, tensors)


def seeded_weights(net: StructureNet, seed: int, scale: float = 1.0) -> StructureNet:
    """He-style fan-in random weights, zero biases; used for fixtures."""
    rng = np.random.default_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    for s in net.specs:
        fan_in = s.in_channels * 9
        std = scale * np.sqrt(2.0 / fan_in)
        tensors[f"{s.name}.weight"] = (
            rng.standard_normal((s.out_channels, s.in_channels, 3, 3)) * std
        ).astype(np.float32)
        tensors[f"{s.name}.bias"] = np.zeros((s.out_channels,), np.float32)
    return StructureNet(net.specs, tensors)
