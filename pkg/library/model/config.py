"""Model configuration."""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from library.polyops import VARIANTS


class PatchConfig(BaseModel):
    """
    Patch tokenization of the lookback window.

    Each channel's window is cut into segments of ``patch_len`` values taken
    every ``stride`` steps; every segment becomes one token.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    patch_len: int = Field(default=16, ge=1)
    stride: int = Field(default=8, ge=1)
    lookback: int = Field(default=96, ge=1)

    @model_validator(mode="after")
    def _check_extents(self) -> PatchConfig:
        if not self.stride <= self.patch_len <= self.lookback:
            raise ValueError(
                f"need 1 <= stride <= patch_len <= lookback, got stride={self.stride}, "
                f"patch_len={self.patch_len}, lookback={self.lookback}"
            )
        return self

    @property
    def tokens(self) -> int:
        """L_tok = floor((lookback − patch_len) / stride) + 1."""
        return (self.lookback - self.patch_len) // self.stride + 1


class ModelConfig(BaseModel):
    """
    Forecaster architecture.

    Attributes:
        channels: C, number of series
        d_model: D, token embedding width
        state_size: N, Legendre orders per state (>= 3)
        layers: Number of stacked blocks
        d_inner: Block inner width
        horizon: Forecast length
        dropout: Rate applied after each block's output projection and before the head
        conv_width: Causal depthwise convolution width
        instance_norm: Per-window mean/std removal on input, restored on output
        variant: State transform (full, gate_only, no_lcm, no_mopa, vanilla)
        patch: Patch tokenization
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    channels: int = Field(default=7, ge=1)
    d_model: int = Field(default=16, ge=1)
    state_size: int = Field(default=8, ge=3)
    layers: int = Field(default=2, ge=1)
    d_inner: int = Field(default=32, ge=1)
    horizon: int = Field(default=96, ge=1)
    dropout: float = Field(default=0.1, ge=0.0, lt=1.0)
    conv_width: int = Field(default=4, ge=1)
    instance_norm: bool = True
    variant: str = "full"
    patch: PatchConfig = Field(default_factory=PatchConfig)

    @field_validator("variant")
    @classmethod
    def _known_variant(cls, value: str) -> str:
        if value not in VARIANTS:
            raise ValueError(f"variant must be one of {', '.join(VARIANTS)}, got {value!r}")
        return value

    @property
    def lookback(self) -> int:
        return self.patch.lookback

    @property
    def tokens(self) -> int:
        return self.patch.tokens
