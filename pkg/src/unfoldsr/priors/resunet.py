"""Inference-only ResUNet denoiser in numpy.

Input is the image concatenated with a constant noise-level plane. A 3x3
head convolution lifts it to 64 channels, three down stages (two residual
blocks, then a 2x2 stride-2 convolution) reach 512 channels, a body of two
residual blocks follows, and three up stages (2x2 stride-2 transposed
convolution, then two residual blocks) return to 64 channels before a 3x3
tail convolution. Each stage's input is summed with the matching
down-path feature map. Head, tail and the strided layers have no
activation.

Tensors follow the (out, in, kh, kw) layout for convolutions and
(in, out, kh, kw) for transposed convolutions.
"""

from __future__ import annotations

import numpy as np

from ..imaging import as_image
from .weights import WeightFormatError, WeightStore

CHANNELS = (64, 128, 256, 512)
BLOCKS = 2


def resunet_manifest(in_channels: int = 3, channels=CHANNELS, blocks: int = BLOCKS,
                     bias: bool = True) -> dict[str, tuple]:
    """Name -> shape for every tensor of the network."""
    m: dict[str, tuple] = {}

    def conv(name, cin, cout, k):
        m[f"{name}.weight"] = (cout, cin, k, k)
        if bias:
            m[f"{name}.bias"] = (cout,)

    def tconv(name, cin, cout, k):
        m[f"{name}.weight"] = (cin, cout, k, k)
        if bias:
            m[f"{name}.bias"] = (cout,)

    def resblocks(prefix, c):
        for b in range(blocks):
            conv(f"{prefix}.res{b}.conv1", c, c, 3)
            conv(f"{prefix}.res{b}.conv2", c, c, 3)

    conv("head", in_channels + 1, channels[0], 3)
    for i in range(len(channels) - 1):
        resblocks(f"down{i + 1}", channels[i])
        conv(f"down{i + 1}.sconv", channels[i], channels[i + 1], 2)
    resblocks("body", channels[-1])
    for i in reversed(range(len(channels) - 1)):
        tconv(f"up{i + 1}.tconv", channels[i + 1], channels[i], 2)
        resblocks(f"up{i + 1}", channels[i])
    conv("tail", channels[0], in_channels, 3)
    return m


def random_weights(in_channels: int = 3, seed: int = 0, bias: bool = True,
                   channels=CHANNELS, blocks: int = BLOCKS) -> WeightStore:
    """He-scaled random weights, small enough that activations stay bounded."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in resunet_manifest(in_channels, channels, blocks, bias).items():
        if name.endswith(".bias"):
            tensors[name] = np.zeros(shape, np.float32)
            continue
        fan_in = shape[0] * shape[2] * shape[3] if ".tconv" in name else int(np.prod(shape[1:]))
        gain = 0.5 if ".res" in name else 1.0
        tensors[name] = rng.normal(0.0, gain * np.sqrt(2.0 / fan_in), shape).astype(np.float32)
    return WeightStore(tensors)


def _bias(weights, name):
    return weights.get(f"{name}.bias")


def conv3x3(x: np.ndarray, w: np.ndarray, b=None) -> np.ndarray:
    """Same-size 3x3 convolution with zero padding; ``x`` is (H, W, Cin)."""
    h, wd, cin = x.shape
    xp = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    cols = np.lib.stride_tricks.sliding_window_view(xp, (3, 3), axis=(0, 1))
    # cols: (H, W, Cin, 3, 3)
    out = cols.reshape(h * wd, cin * 9) @ w.reshape(w.shape[0], -1).T
    if b is not None:
        out += b
    return out.reshape(h, wd, -1)


def strided_conv2x2(x: np.ndarray, w: np.ndarray, b=None) -> np.ndarray:
    h, wd, cin = x.shape
    blocks = x.reshape(h // 2, 2, wd // 2, 2, cin).transpose(0, 2, 4, 1, 3)
    out = blocks.reshape((h // 2) * (wd // 2), cin * 4) @ w.reshape(w.shape[0], -1).T
    if b is not None:
        out += b
    return out.reshape(h // 2, wd // 2, -1)


def transposed_conv2x2(x: np.ndarray, w: np.ndarray, b=None) -> np.ndarray:
    h, wd, cin = x.shape
    cout = w.shape[1]
    out = x.reshape(h * wd, cin) @ w.reshape(cin, cout * 4)
    out = out.reshape(h, wd, cout, 2, 2).transpose(0, 3, 1, 4, 2).reshape(2 * h, 2 * wd, cout)
    if b is not None:
        out += b
    return out


def _resblock(x, weights, prefix):
    r = conv3x3(x, weights[f"{prefix}.conv1.weight"], _bias(weights, f"{prefix}.conv1"))
    np.maximum(r, 0.0, out=r)
    r = conv3x3(r, weights[f"{prefix}.conv2.weight"], _bias(weights, f"{prefix}.conv2"))
    return x + r


def _group(x, weights, prefix, blocks):
    for b in range(blocks):
        x = _resblock(x, weights, f"{prefix}.res{b}")
    return x


def resunet_forward(z, beta: float, weights: WeightStore, blocks: int = BLOCKS) -> np.ndarray:
    """Denoise ``z`` at noise level ``beta`` (unit range).

    Spatial sizes must be divisible by 8; :class:`ResUNetPrior` pads and
    crops arbitrary sizes.
    """
    z = as_image(z)
    squeeze = z.ndim == 2
    if squeeze:
        z = z[..., None]
    h, w, c = z.shape
    levels = sum(1 for name in weights if name.endswith(".sconv.weight"))
    factor = 2 ** levels
    if h % factor or w % factor:
        raise ValueError(f"ResUNet input {h}x{w} must be divisible by {factor}")
    head = weights.get("head.weight")
    if head is None or head.shape[1] != c + 1:
        raise WeightFormatError(f"weights do not fit a {c}-channel input")

    x = np.concatenate([z, np.full((h, w, 1), beta)], axis=2).astype(np.float32)
    x = conv3x3(x, weights["head.weight"], _bias(weights, "head"))
    skips = [x]
    for i in range(1, levels + 1):
        x = _group(x, weights, f"down{i}", blocks)
        x = strided_conv2x2(x, weights[f"down{i}.sconv.weight"], _bias(weights, f"down{i}.sconv"))
        skips.append(x)
    x = _group(x, weights, "body", blocks)
    for i in reversed(range(1, levels + 1)):
        x = transposed_conv2x2(x + skips[i], weights[f"up{i}.tconv.weight"],
                               _bias(weights, f"up{i}.tconv"))
        x = _group(x, weights, f"up{i}", blocks)
    x = conv3x3(x + skips[0], weights["tail.weight"], _bias(weights, "tail"))
    out = x.astype(np.float64)
    return out[..., 0] if squeeze else out


class ResUNetPrior:
    """Denoiser prior backed by externally supplied ResUNet weights."""

    name = "cnn"

    def __init__(self, weights: WeightStore, blocks: int = BLOCKS):
        self.weights = weights
        self.blocks = blocks
        self.levels = sum(1 for n in weights if n.endswith(".sconv.weight"))

    def denoise(self, z, beta: float) -> np.ndarray:
        z = as_image(z)
        f = 2 ** self.levels
        h, w = z.shape[:2]
        ph, pw = -h % f, -w % f
        pad = ((0, ph), (0, pw)) + ((0, 0),) * (z.ndim - 2)
        out = resunet_forward(np.pad(z, pad, mode="edge"), beta, self.weights, self.blocks)
        return out[:h, :w]
