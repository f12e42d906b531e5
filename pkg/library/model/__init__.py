"""Patch-token Poly-Mamba forecaster, its configuration and checkpoint container."""

from library.model.blocks import BlockParams, block_forward, causal_conv, rms_norm
from library.model.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    Checkpoint,
    load_checkpoint,
    read_header,
    save_checkpoint,
)
from library.model.config import ModelConfig, PatchConfig
from library.model.forecaster import ForecastModel, patch_embed, patch_indices

__all__ = [
    "BlockParams",
    "Checkpoint",
    "FORMAT_VERSION",
    "ForecastModel",
    "MAGIC",
    "ModelConfig",
    "PatchConfig",
    "block_forward",
    "causal_conv",
    "load_checkpoint",
    "patch_embed",
    "patch_indices",
    "read_header",
    "rms_norm",
    "save_checkpoint",
]
