"""
Poly-Mamba block.

    x = RMSNorm(tokens) · W_in, split into (value, gate)
    u = SiLU(causal_conv(value))
    h = selective_scan(discretize(u));  h' = poly_state_transform(h)
    y = readout(h', C, u) ⊙ SiLU(gate)
    out = tokens + dropout(y · W_out)

Tokens are laid out [batch, C, L_tok, D]; every channel runs the same
weights along its own token axis, and channels meet only inside the state
transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from library.errors import DimensionError
from library.numerics import DEFAULT_DTYPE, Parameter, Tensor, ops
from library.polyops import PolyParams, poly_state_transform
from library.sscan import SelectiveParams, discretize, readout, selective_scan, selectivize
from library.sscan.scan import ScanMode

RMS_EPS = 1e-6


@dataclass
class BlockParams:
    """Weights of one block."""

    norm_scale: Parameter
    w_in: Parameter
    conv_w: Parameter
    conv_b: Parameter
    ssm: SelectiveParams
    poly: PolyParams
    w_out: Parameter

    @property
    def d_model(self) -> int:
        return int(self.norm_scale.shape[0])

    @property
    def d_inner(self) -> int:
        return int(self.w_out.shape[0])

    @classmethod
    def init(
        cls,
        channels: int,
        d_model: int,
        d_inner: int,
        state_size: int,
        conv_width: int,
        variant: str,
        rng: np.random.Generator,
        dtype: str = DEFAULT_DTYPE,
        prefix: str = "block",
    ) -> BlockParams:
        return cls(
            norm_scale=Parameter(np.ones(d_model), f"{prefix}.norm_scale", dtype),
            w_in=Parameter(
                rng.normal(0.0, 1.0 / math.sqrt(d_model), (d_model, 2 * d_inner)),
                f"{prefix}.w_in",
                dtype,
            ),
            conv_w=Parameter(
                rng.normal(0.0, 1.0 / math.sqrt(conv_width), (conv_width, d_inner)),
                f"{prefix}.conv_w",
                dtype,
            ),
            conv_b=Parameter(np.zeros(d_inner), f"{prefix}.conv_b", dtype),
            ssm=SelectiveParams.init(d_inner, state_size, rng, dtype, prefix=f"{prefix}.ssm"),
            poly=PolyParams.init(channels, state_size, variant, dtype, prefix=f"{prefix}.poly"),
            w_out=Parameter(
                rng.normal(0.0, 1.0 / math.sqrt(d_inner), (d_inner, d_model)),
                f"{prefix}.w_out",
                dtype,
            ),
        )

    def parameters(self) -> list[Parameter]:
        return [
            self.norm_scale,
            self.w_in,
            self.conv_w,
            self.conv_b,
            *self.ssm.parameters(),
            *self.poly.parameters(),
            self.w_out,
        ]


def rms_norm(x: Tensor, scale: Tensor) -> Tensor:
    """x / sqrt(mean(x²) + eps) · scale over the last axis."""
    inv = ops.power(ops.mean(x * x, axis=-1, keepdims=True) + RMS_EPS, -0.5)
    return x * inv * scale


def causal_conv(x: Tensor, weight: Tensor, bias: Tensor, axis: int = -2) -> Tensor:
    """
    Depthwise causal convolution along ``axis``.

    out[t] = Σ_k weight[k] ⊙ x[t − (K − 1) + k] + bias, with x[<0] = 0.

    Args:
        x: [..., L, D] input
        weight: [K, D] per-feature taps
        bias: [D]
    """
    axis = axis % x.ndim
    width = weight.shape[0]
    length = x.shape[axis]
    if weight.shape[1] != x.shape[-1]:
        raise DimensionError(f"conv taps {weight.shape} do not match features {x.shape[-1]}")
    pad_shape = list(x.shape)
    pad_shape[axis] = width - 1
    padded = ops.concat([Tensor(np.zeros(pad_shape, dtype=x.dtype)), x], axis=axis)
    out: Tensor | None = None
    for k in range(width):
        index = [slice(None)] * x.ndim
        index[axis] = slice(k, k + length)
        term = padded[tuple(index)] * weight[k]
        out = term if out is None else out + term
    assert out is not None
    return out + bias


def block_forward(
    tokens: Tensor,
    bp: BlockParams,
    mode: ScanMode = "parallel",
    *,
    dropout: float = 0.0,
    training: bool = False,
    rng: np.random.Generator | None = None,
    workers: int = 1,
    chunk: int | None = None,
    trace: dict[str, Any] | None = None,
) -> Tensor:
    """
    One residual block.

    Args:
        tokens: [batch, C, L_tok, D]
        bp: Block weights
        mode: Scan kernel ("sequential" or "parallel")
        dropout: Rate on the block output
        training: Enables dropout
        rng: Dropout randomness
        workers: Threads for the parallel scan
        chunk: Scan window for chunked evaluation
        trace: Dict filled with state-transform diagnostics

    Returns:
        [batch, C, L_tok, D]
    """
    if tokens.ndim != 4 or tokens.shape[-1] != bp.d_model:
        raise DimensionError(
            f"tokens must be [batch, C, L_tok, {bp.d_model}], got shape {tokens.shape}"
        )
    d_inner = bp.d_inner
    normed = rms_norm(tokens, bp.norm_scale)
    projected = ops.matmul(normed, bp.w_in)
    value, gate = projected[..., :d_inner], projected[..., d_inner:]

    u = ops.silu(causal_conv(value, bp.conv_w, bp.conv_b, axis=2))
    delta, b_t, c_t = selectivize(u, bp.ssm)
    step = discretize(delta, bp.ssm.a_log, b_t, u)
    states = selective_scan(
        step.a_bar, step.b_bar_x, axis=2, mode=mode, workers=workers, chunk=chunk
    )
    transformed = poly_state_transform(states, bp.poly, trace)
    y = readout(transformed, c_t, u, bp.ssm.d_skip) * ops.silu(gate)

    out = ops.dropout(ops.matmul(y, bp.w_out), dropout, rng, training)
    return tokens + out
