"""Network assembly: layer stacks, parameter sets, forward and backward passes.

A net is an ordered tuple of layer descriptors (see ``layers``). Parameters
live in a ``ParamSet`` keyed by ``layer{i}.weight`` / ``layer{i}.bias``.
Forward/backward are pure given (params, input); backward accumulates into
``ParamSet.grads`` and returns the input gradient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import layers as L


class ShapeError(ValueError):
    """Input/layer shape mismatch, reported with the offending layer."""


@dataclass(frozen=True)
class NetSpec:
    layers: tuple[L.LayerSpec, ...]

    def __post_init__(self):
        rank = None
        channels = None
        for i, layer in enumerate(self.layers):
            if isinstance(layer, (L.Conv2d, L.Conv3d)):
                lr = 2 if isinstance(layer, L.Conv2d) else 3
                if rank is None:
                    rank = lr
                elif rank != lr:
                    raise ShapeError(f"layer {i} ({_name(layer)}): mixes conv2d and conv3d in one net")
                if channels is None:
                    channels = layer.in_ch
                elif channels != layer.in_ch:
                    raise ShapeError(
                        f"layer {i} ({_name(layer)}): expects {layer.in_ch} input channels, "
                        f"previous layer emits {channels}"
                    )
                if layer.kernel < 1 or layer.stride < 1 or layer.padding < 0:
                    raise ShapeError(f"layer {i} ({_name(layer)}): bad kernel/stride/padding")
                channels = layer.out_ch
            elif isinstance(layer, L.BiasAdd):
                if channels is not None and channels != layer.channels:
                    raise ShapeError(
                        f"layer {i} (bias_add): expects {layer.channels} channels, "
                        f"previous layer emits {channels}"
                    )
                channels = layer.channels
            elif isinstance(layer, L.Upsample2d):
                if rank == 3:
                    raise ShapeError(f"layer {i} (upsample2d): only valid in 2-D nets")
                if layer.factor < 1:
                    raise ShapeError(f"layer {i} (upsample2d): factor must be >= 1")
                rank = 2
        if rank is None:
            rank = 2
        object.__setattr__(self, "_rank", rank)

    @property
    def rank(self) -> int:
        return self._rank

    @property
    def in_channels(self) -> int:
        for layer in self.layers:
            if isinstance(layer, (L.Conv2d, L.Conv3d)):
                return layer.in_ch
            if isinstance(layer, L.BiasAdd):
                return layer.channels
        raise ShapeError("net has no channel-bearing layer")

    def out_shape(self, in_shape: tuple[int, ...]) -> tuple[int, ...]:
        """Output shape for a (C, *spatial) input; raises ShapeError if invalid."""
        if len(in_shape) != self.rank + 1:
            raise ShapeError(f"expected rank-{self.rank + 1} input (C, spatial...), got {in_shape}")
        shape = tuple(in_shape)
        for i, layer in enumerate(self.layers):
            if isinstance(layer, (L.Conv2d, L.Conv3d)):
                if shape[0] != layer.in_ch:
                    raise ShapeError(
                        f"layer {i} ({_name(layer)}): expects {layer.in_ch} input channels, got {shape[0]}"
                    )
                spatial = tuple(
                    L.conv_out_size(s, layer.kernel, layer.stride, layer.padding) for s in shape[1:]
                )
                if any(s < 1 for s in spatial):
                    raise ShapeError(
                        f"layer {i} ({_name(layer)}): output spatial dims {spatial} not positive "
                        f"for input {shape[1:]}"
                    )
                shape = (layer.out_ch,) + spatial
            elif isinstance(layer, L.BiasAdd):
                if shape[0] != layer.channels:
                    raise ShapeError(
                        f"layer {i} (bias_add): expects {layer.channels} channels, got {shape[0]}"
                    )
            elif isinstance(layer, L.Upsample2d):
                shape = (shape[0],) + tuple(s * layer.factor for s in shape[1:])
        return shape


@dataclass
class ParamSet:
    """Named parameters with matching gradient and Adam-moment buffers."""

    params: dict[str, np.ndarray] = field(default_factory=dict)
    grads: dict[str, np.ndarray] = field(default_factory=dict)
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def add(self, name: str, value: np.ndarray) -> None:
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)
        self.m[name] = np.zeros_like(value)
        self.v[name] = np.zeros_like(value)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0

    def astype(self, dtype) -> "ParamSet":
        out = ParamSet(step=self.step)
        for name, p in self.params.items():
            out.params[name] = p.astype(dtype)
            out.grads[name] = self.grads[name].astype(dtype)
            out.m[name] = self.m[name].astype(dtype)
            out.v[name] = self.v[name].astype(dtype)
        return out


def init_params(net: NetSpec, rng: np.random.Generator, dtype=np.float32) -> ParamSet:
    """Fan-in-scaled uniform init (bound sqrt(6/fan_in)); biases start at zero."""
    ps = ParamSet()
    for i, layer in enumerate(net.layers):
        if isinstance(layer, L.Conv2d):
            fan_in = layer.in_ch * layer.kernel**2
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(-bound, bound, size=(layer.out_ch, layer.in_ch, layer.kernel, layer.kernel))
            ps.add(f"layer{i}.weight", w.astype(dtype))
            ps.add(f"layer{i}.bias", np.zeros(layer.out_ch, dtype=dtype))
        elif isinstance(layer, L.Conv3d):
            fan_in = layer.in_ch * layer.kernel**3
            bound = np.sqrt(6.0 / fan_in)
            w = rng.uniform(
                -bound, bound, size=(layer.out_ch, layer.in_ch, layer.kernel, layer.kernel, layer.kernel)
            )
            ps.add(f"layer{i}.weight", w.astype(dtype))
            ps.add(f"layer{i}.bias", np.zeros(layer.out_ch, dtype=dtype))
        elif isinstance(layer, L.BiasAdd):
            ps.add(f"layer{i}.bias", np.zeros(layer.channels, dtype=dtype))
    return ps


def forward(net: NetSpec, params: ParamSet, x: np.ndarray, cache: list | None = None) -> np.ndarray:
    """Run the stack on a (C, *spatial) input.

    When ``cache`` is a list it receives per-layer inputs (and softmax/sigmoid
    outputs) so a following ``backward`` can reuse them.
    """
    net.out_shape(x.shape)  # validate up front so errors name the layer
    for i, layer in enumerate(net.layers):
        if isinstance(layer, L.Conv2d):
            if cache is not None:
                cache.append(x)
            x = L.conv2d_forward(x, params.params[f"layer{i}.weight"], params.params[f"layer{i}.bias"],
                                 layer.stride, layer.padding)
        elif isinstance(layer, L.Conv3d):
            if cache is not None:
                cache.append(x)
            x = L.conv3d_forward(x, params.params[f"layer{i}.weight"], params.params[f"layer{i}.bias"],
                                 layer.stride, layer.padding)
        elif isinstance(layer, L.Relu):
            if cache is not None:
                cache.append(x)
            x = L.relu_forward(x)
        elif isinstance(layer, L.Sigmoid):
            x = L.sigmoid_forward(x)
            if cache is not None:
                cache.append(x)  # backward needs the output
        elif isinstance(layer, L.SpatialSoftmax):
            x = L.spatial_softmax_forward(x, layer.beta)
            if cache is not None:
                cache.append(x)
        elif isinstance(layer, L.BiasAdd):
            if cache is not None:
                cache.append(x)
            x = L.bias_add_forward(x, params.params[f"layer{i}.bias"])
        elif isinstance(layer, L.Upsample2d):
            if cache is not None:
                cache.append(x)
            x = L.upsample2d_forward(x, layer.factor)
        else:  # pragma: no cover
            raise ShapeError(f"layer {i}: unknown layer type {type(layer).__name__}")
    return x


def backward(
    net: NetSpec,
    params: ParamSet,
    x: np.ndarray,
    loss_grad: np.ndarray,
    cache: list | None = None,
    need_input_grad: bool = False,
) -> np.ndarray | None:
    """Accumulate parameter gradients for d(loss)/d(output) = loss_grad.

    Recomputes the forward pass when no cache from a matching ``forward`` call
    is supplied. Returns the gradient with respect to the input, or None
    unless need_input_grad is set (skipping it saves the first conv's
    input-gradient pass, which training never uses).
    """
    if cache is None:
        cache = []
        forward(net, params, x, cache=cache)
    if len(cache) != len(net.layers):
        raise ShapeError("backward called with a cache that does not match the net")
    gy = loss_grad
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        saved = cache[i]
        want_gx = need_input_grad or i > 0
        if isinstance(layer, L.Conv2d):
            gy, gw, gb = L.conv2d_backward(saved, params.params[f"layer{i}.weight"], gy,
                                           layer.stride, layer.padding, want_gx)
            params.grads[f"layer{i}.weight"] += gw
            params.grads[f"layer{i}.bias"] += gb
        elif isinstance(layer, L.Conv3d):
            gy, gw, gb = L.conv3d_backward(saved, params.params[f"layer{i}.weight"], gy,
                                           layer.stride, layer.padding, want_gx)
            params.grads[f"layer{i}.weight"] += gw
            params.grads[f"layer{i}.bias"] += gb
        elif isinstance(layer, L.Relu):
            gy = L.relu_backward(saved, gy)
        elif isinstance(layer, L.Sigmoid):
            gy = L.sigmoid_backward(saved, gy)
        elif isinstance(layer, L.SpatialSoftmax):
            gy = L.spatial_softmax_backward(saved, gy, layer.beta)
        elif isinstance(layer, L.BiasAdd):
            gy, gb = L.bias_add_backward(gy)
            params.grads[f"layer{i}.bias"] += gb
        elif isinstance(layer, L.Upsample2d):
            gy = L.upsample2d_backward(gy, layer.factor)
    return gy


def _name(layer: L.LayerSpec) -> str:
    return type(layer).__name__.lower()
