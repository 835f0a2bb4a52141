"""Network for inverse design from three sparse waypoint states.

A permutation-invariant set encoder compresses the waypoints into one
latent vector, a transformer decoder expands that latent into a
64-frame trajectory and velocity field, and a dual-branch head reads
both the latent and the reconstruction to regress the two design
parameters.  The residual half of the head starts at exactly zero, so
an untrained network behaves like its shortcut branch alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import Tensor, nn

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ModelConfig:
    """Widths and rates; the defaults give the ~5M-parameter reference net."""

    point_features: int = 7
    point_widths: tuple[int, int, int] = (64, 128, 256)
    latent_width: int = 512
    decoder_layers: int = 4
    heads: int = 8
    model_width: int = 256
    ffn_width: int = 1024
    frames: int = 64
    dropout: float = 0.1
    a_max: float = 2.0


def sinusoidal_queries(frames: int, width: int) -> Tensor:
    """Fixed sine/cosine position codes, used directly as decoder queries."""
    position = torch.arange(frames, dtype=torch.float32).unsqueeze(1)
    rate = torch.exp(
        torch.arange(0, width, 2, dtype=torch.float32) * (-math.log(10000.0) / width)
    )
    table = torch.zeros(frames, width)
    table[:, 0::2] = torch.sin(position * rate)
    table[:, 1::2] = torch.cos(position * rate)
    return table


def _point_mlp(in_features: int, widths: tuple[int, ...], dropout: float) -> nn.Sequential:
    """Shared per-point lift: linear, layer norm, GELU and dropout per stage."""
    layers: list[nn.Module] = []
    previous = in_features
    for width in widths:
        layers += [nn.Linear(previous, width), nn.LayerNorm(width), nn.GELU(), nn.Dropout(dropout)]
        previous = width
    return nn.Sequential(*layers)


class SetEncoder(nn.Module):
    """Order-free read of the waypoint set via learned attention pooling.

    Every 7-feature state is lifted independently through shared weights;
    a scored softmax blends the lifted points, so permuting the inputs
    permutes the weights with them and the pooled feature is unchanged.
    """

    def __init__(self, cfg: ModelConfig) -> None:
        super().__init__()
        self.point_features = cfg.point_features
        self.lift = _point_mlp(cfg.point_features, cfg.point_widths, cfg.dropout)
        feature = cfg.point_widths[-1]
        self.scorer = nn.Sequential(
            nn.Linear(feature, feature // 2), nn.Tanh(), nn.Linear(feature // 2, 1)
        )
        self.proj = nn.Linear(feature, cfg.latent_width)
        self.norm = nn.LayerNorm(cfg.latent_width)

    def forward(self, waypoints: Tensor) -> tuple[Tensor, Tensor]:
        """Return the latent (B, latent_width) and pool weights (B, n)."""
        if waypoints.ndim != 3 or waypoints.shape[-1] != self.point_features:
            raise ValueError(
                f"waypoints must be (batch, n, {self.point_features}), got {tuple(waypoints.shape)}"
            )
        lifted = self.lift(waypoints)
        weights = torch.softmax(self.scorer(lifted), dim=1)
        pooled = (weights * lifted).sum(dim=1)
        latent = nn.functional.gelu(self.norm(self.proj(pooled)))
        return latent, weights.squeeze(-1)


def _frame_head(cfg: ModelConfig) -> nn.Sequential:
    return nn.Sequential(
        nn.LayerNorm(cfg.model_width),
        nn.Linear(cfg.model_width, cfg.model_width // 2),
        nn.GELU(),
        nn.Dropout(cfg.dropout),
        nn.Linear(cfg.model_width // 2, 3),
    )


class TrajectoryDecoder(nn.Module):
    """Expands one latent vector into per-frame positions and velocities.

    The latent is projected to a length-one cross-attention memory; the
    queries are fixed sinusoidal codes, one per output frame, with no
    learned query parameters.  Two structurally identical heads read the
    decoded frames.
    """

    def __init__(self, cfg: ModelConfig) -> None:
        super().__init__()
        self.memory = nn.Linear(cfg.latent_width, cfg.model_width)
        layer = nn.TransformerDecoderLayer(
            d_model=cfg.model_width,
            nhead=cfg.heads,
            dim_feedforward=cfg.ffn_width,
            dropout=cfg.dropout,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.stack = nn.TransformerDecoder(
            layer, num_layers=cfg.decoder_layers, norm=nn.LayerNorm(cfg.model_width)
        )
        self.register_buffer(
            "queries", sinusoidal_queries(cfg.frames, cfg.model_width), persistent=False
        )
        self.position_head = _frame_head(cfg)
        self.velocity_head = _frame_head(cfg)

    def forward(self, latent: Tensor) -> tuple[Tensor, Tensor]:
        memory = self.memory(latent).unsqueeze(1)
        queries = self.queries.unsqueeze(0).expand(latent.shape[0], -1, -1)
        decoded = self.stack(queries, memory)
        return self.position_head(decoded), self.velocity_head(decoded)


class ResidualBranch(nn.Module):
    """Set-style read of the reconstructed frames, zero at initialization.

    Max and average pooling run side by side and are summed, keeping the
    feature width.  The final map starts with zero weights and bias, so
    its output is exactly zero until training moves it.
    """

    def __init__(self, cfg: ModelConfig) -> None:
        super().__init__()
        self.lift = _point_mlp(6, cfg.point_widths, cfg.dropout)
        feature, mid, low = cfg.point_widths[::-1]
        self.head = nn.Sequential(
            nn.Linear(feature, mid), nn.GELU(), nn.Linear(mid, low), nn.GELU()
        )
        self.refine = nn.Linear(low, 3)
        nn.init.zeros_(self.refine.weight)
        nn.init.zeros_(self.refine.bias)

    def forward(self, frames: Tensor) -> Tensor:
        lifted = self.lift(frames)
        pooled = lifted.amax(dim=1) + lifted.mean(dim=1)
        return self.refine(self.head(pooled))


@dataclass
class ModelOutputs:
    """One forward pass: the reconstruction plus raw parameter logits."""

    trajectory: Tensor
    velocities: Tensor
    shortcut: Tensor
    merged: Tensor


class OConNet(nn.Module):
    """Full network: encoder, trajectory decoder and dual-branch head."""

    def __init__(self, cfg: ModelConfig | None = None) -> None:
        super().__init__()
        self.cfg = cfg or ModelConfig()
        cfg = self.cfg
        self.encoder = SetEncoder(cfg)
        self.decoder = TrajectoryDecoder(cfg)
        self.shortcut = nn.Sequential(
            nn.Linear(cfg.latent_width, cfg.model_width),
            nn.LayerNorm(cfg.model_width),
            nn.GELU(),
            nn.Dropout(0.1),
            nn.Linear(cfg.model_width, cfg.model_width // 2),
            nn.GELU(),
            nn.Linear(cfg.model_width // 2, 3),
        )
        self.residual = ResidualBranch(cfg)

    def encode(self, waypoints: Tensor) -> Tensor:
        latent, _ = self.encoder(waypoints)
        return latent

    def forward(self, waypoints: Tensor) -> ModelOutputs:
        latent, _ = self.encoder(waypoints)
        trajectory, velocities = self.decoder(latent)
        coarse = self.shortcut(latent)
        refine = self.residual(torch.cat([trajectory, velocities], dim=-1))
        return ModelOutputs(trajectory, velocities, coarse, coarse + refine)


def decode_params(logits: Tensor, a_max: float = 2.0) -> tuple[Tensor, Tensor]:
    """Map raw (m_a, m_sin, m_cos) logits to the two design parameters.

    The link length lands strictly inside (0, a_max): the sigmoid output
    is clamped one epsilon short of saturation so that arbitrarily large
    logits cannot pin the prediction to a boundary value.  The twist is
    atan2 folded into [0, 2*pi); the seam value 2*pi itself, reachable
    only through rounding of tiny negative angles, maps back to 0.
    """
    eps = torch.finfo(logits.dtype).eps
    a12 = a_max * torch.sigmoid(logits[..., 0]).clamp(eps, 1.0 - eps)
    alpha12 = torch.atan2(logits[..., 1], logits[..., 2]).remainder(TWO_PI)
    alpha12 = torch.where(alpha12 >= TWO_PI, torch.zeros_like(alpha12), alpha12)
    return a12, alpha12
