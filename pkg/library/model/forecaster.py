"""
Patch-token forecaster.

series [B, C, lookback]
    → instance norm (per window and channel)
    → patch embedding shared across channels      [B, C, L_tok, D]
    → ``layers`` Poly-Mamba blocks
    → flatten the final layer per channel        [B, C, L_tok·D]
    → dropout, shared linear head                 [B, C, horizon]
    → instance denormalization
"""

from __future__ import annotations

import math
from typing import Any, Iterator

import numpy as np
import structlog

from library.errors import CheckpointError, DimensionError
from library.model.blocks import BlockParams, block_forward
from library.model.config import ModelConfig, PatchConfig
from library.numerics import DEFAULT_DTYPE, Parameter, Tensor, as_dtype, ops
from library.sscan.scan import ScanMode

logger = structlog.get_logger(__name__)

INSTANCE_EPS = 1e-5


def patch_indices(patch: PatchConfig) -> np.ndarray:
    """(L_tok, patch_len) positions of every patch inside the lookback window."""
    starts = np.arange(patch.tokens) * patch.stride
    return starts[:, None] + np.arange(patch.patch_len)[None, :]


def patch_embed(series: Tensor, patch: PatchConfig, weight: Tensor, bias: Tensor) -> Tensor:
    """
    Cut each channel into patches and embed them with a shared linear map.

    Args:
        series: [batch, C, lookback]
        patch: Patch configuration
        weight: [patch_len, D]
        bias: [D]

    Returns:
        [batch, C, L_tok, D]
    """
    if series.ndim != 3:
        raise DimensionError(f"series must be [batch, C, lookback], got shape {series.shape}")
    if series.shape[-1] != patch.lookback:
        raise DimensionError(
            f"series lookback {series.shape[-1]} != configured lookback {patch.lookback}"
        )
    if series.shape[-1] < patch.patch_len:
        raise DimensionError(
            f"lookback {series.shape[-1]} is shorter than patch_len {patch.patch_len}"
        )
    patches = series[:, :, patch_indices(patch)]
    return ops.matmul(patches, weight) + bias


class ForecastModel:
    """
    Poly-Mamba forecaster.

    Args:
        config: Architecture
        params: Named parameters (see ``parameter_names``)

    Example:
        >>> model = ForecastModel.init(ModelConfig(channels=2, horizon=8), seed=0)
        >>> model.forward(Tensor(np.zeros((4, 2, 96)))).shape
        (4, 2, 8)
    """

    def __init__(
        self,
        config: ModelConfig,
        embed_w: Parameter,
        embed_b: Parameter,
        blocks: list[BlockParams],
        head_w: Parameter,
        head_b: Parameter,
    ):
        self.config = config
        self.embed_w = embed_w
        self.embed_b = embed_b
        self.blocks = blocks
        self.head_w = head_w
        self.head_b = head_b

    @classmethod
    def init(
        cls, config: ModelConfig, seed: int = 0, dtype: str = DEFAULT_DTYPE
    ) -> ForecastModel:
        """Fresh model; every initializer draws from one generator seeded by ``seed``."""
        as_dtype(dtype)
        rng = np.random.default_rng(seed)
        patch_len = config.patch.patch_len
        flat = config.tokens * config.d_model
        embed_w = Parameter(
            rng.normal(0.0, 1.0 / math.sqrt(patch_len), (patch_len, config.d_model)),
            "embed.w",
            dtype,
        )
        embed_b = Parameter(np.zeros(config.d_model), "embed.b", dtype)
        blocks = [
            BlockParams.init(
                channels=config.channels,
                d_model=config.d_model,
                d_inner=config.d_inner,
                state_size=config.state_size,
                conv_width=config.conv_width,
                variant=config.variant,
                rng=rng,
                dtype=dtype,
                prefix=f"blocks.{i}",
            )
            for i in range(config.layers)
        ]
        head_w = Parameter(
            rng.normal(0.0, 1.0 / math.sqrt(flat), (flat, config.horizon)), "head.w", dtype
        )
        head_b = Parameter(np.zeros(config.horizon), "head.b", dtype)
        model = cls(config, embed_w, embed_b, blocks, head_w, head_b)
        logger.debug(
            "model_initialized",
            variant=config.variant,
            parameters=model.parameter_count(),
            seed=seed,
            dtype=dtype,
        )
        return model

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------
    def parameters(self) -> Iterator[Parameter]:
        """Named parameters in a fixed order (embedding, blocks, head)."""
        yield self.embed_w
        yield self.embed_b
        for block in self.blocks:
            yield from block.parameters()
        yield self.head_w
        yield self.head_b

    def parameter_names(self) -> list[str]:
        return [p.name for p in self.parameters()]

    def parameter_count(self) -> int:
        return sum(p.size for p in self.parameters())

    @property
    def dtype(self) -> np.dtype:
        return self.embed_w.dtype

    def state_dict(self) -> dict[str, np.ndarray]:
        return {p.name: p.data.copy() for p in self.parameters()}

    def load_state_dict(self, arrays: dict[str, np.ndarray]) -> None:
        """Copy values into the parameters; names and shapes must match exactly."""
        expected = set(self.parameter_names())
        missing = sorted(expected - set(arrays))
        unexpected = sorted(set(arrays) - expected)
        if missing or unexpected:
            raise CheckpointError(
                f"parameter names do not match the model: missing {missing}, "
                f"unexpected {unexpected}"
            )
        for param in self.parameters():
            values = arrays[param.name]
            if values.shape != param.shape:
                raise CheckpointError(
                    f"{param.name}: stored shape {values.shape} != model shape {param.shape}"
                )
            param.assign(values)

    def zero_grad(self) -> None:
        for param in self.parameters():
            param.zero_grad()

    # ------------------------------------------------------------------
    # Forward
    # ------------------------------------------------------------------
    def forward(
        self,
        series: Tensor | np.ndarray,
        *,
        mode: ScanMode = "parallel",
        training: bool = False,
        rng: np.random.Generator | None = None,
        workers: int = 1,
        chunk: int | None = None,
        trace: list[dict[str, Any]] | None = None,
        encoder_only: bool = False,
    ) -> Tensor:
        """
        Predict the next ``horizon`` steps of every channel.

        Args:
            series: [batch, C, lookback]
            mode: Scan kernel
            training: Enables dropout (needs ``rng``)
            rng: Dropout randomness
            workers: Threads for the parallel scan
            chunk: Scan window for chunked evaluation
            trace: List receiving one diagnostics dict per block
            encoder_only: Return the final-layer tokens [batch, C, L_tok, D] instead

        Returns:
            [batch, C, horizon] predictions on the input's scale
        """
        x = series if isinstance(series, Tensor) else Tensor(series, dtype=self.dtype)
        cfg = self.config
        if x.ndim != 3 or x.shape[1] != cfg.channels:
            raise DimensionError(
                f"series must be [batch, {cfg.channels}, {cfg.lookback}], got shape {x.shape}"
            )

        mean = std = None
        if cfg.instance_norm:
            mean = np.mean(x.data, axis=-1, keepdims=True)
            std = np.sqrt(np.var(x.data, axis=-1, keepdims=True) + INSTANCE_EPS)
            x = (x - Tensor(mean, dtype=x.dtype)) / Tensor(std, dtype=x.dtype)

        tokens = patch_embed(x, cfg.patch, self.embed_w, self.embed_b)
        for block in self.blocks:
            block_trace: dict[str, Any] | None = {} if trace is not None else None
            tokens = block_forward(
                tokens,
                block,
                mode,
                dropout=cfg.dropout,
                training=training,
                rng=rng,
                workers=workers,
                chunk=chunk,
                trace=block_trace,
            )
            if trace is not None and block_trace is not None:
                trace.append(block_trace)
        if encoder_only:
            return tokens

        batch = tokens.shape[0]
        flat = ops.reshape(tokens, (batch, cfg.channels, cfg.tokens * cfg.d_model))
        flat = ops.dropout(flat, cfg.dropout, rng, training)
        prediction = ops.matmul(flat, self.head_w) + self.head_b
        if mean is not None and std is not None:
            prediction = prediction * Tensor(std, dtype=x.dtype) + Tensor(mean, dtype=x.dtype)
        return prediction

    __call__ = forward
