# agency_count/network/transformer.py
from __future__ import annotations

import torch
from torch import nn


class FeedForward(nn.Module):
    def __init__(self, dim: int, hidden: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(dim, hidden),
            nn.GELU(),
            nn.Linear(hidden, dim),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.net(x)


class ForegroundBlock(nn.Module):
    """
    Pre-norm block: self-attention over foreground tokens, cross-attention
    from foreground queries to background keys/values, then a feedforward.
    Each sub-layer is residual. Background tokens are read, never written.
    """

    def __init__(self, dim: int, heads: int, hidden: int):
        super().__init__()
        self.norm_self = nn.LayerNorm(dim)
        self.self_attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm_query = nn.LayerNorm(dim)
        self.norm_context = nn.LayerNorm(dim)
        self.cross_attn = nn.MultiheadAttention(dim, heads, batch_first=True)
        self.norm_ff = nn.LayerNorm(dim)
        self.ff = FeedForward(dim, hidden)

    def forward(self, fg: torch.Tensor, bg: torch.Tensor) -> torch.Tensor:
        x = self.norm_self(fg)
        fg = fg + self.self_attn(x, x, x, need_weights=False)[0]

        if bg.shape[1] > 0:
            q = self.norm_query(fg)
            ctx = self.norm_context(bg)
            fg = fg + self.cross_attn(q, ctx, ctx, need_weights=False)[0]

        return fg + self.ff(self.norm_ff(fg))

    def zero_init(self) -> None:
        """Zero every residual branch output so the block is the identity."""
        for attn in (self.self_attn, self.cross_attn):
            nn.init.zeros_(attn.out_proj.weight)
            nn.init.zeros_(attn.out_proj.bias)
        last = self.ff.net[-1]
        nn.init.zeros_(last.weight)
        nn.init.zeros_(last.bias)


class ForegroundTransformer(nn.Module):
    """Refines foreground tokens ``(n, c)`` using background context ``(m, c)``."""

    def __init__(self, dim: int, heads: int, layers: int, hidden: int, zero_init: bool = False):
        super().__init__()
        self.blocks = nn.ModuleList(ForegroundBlock(dim, heads, hidden) for _ in range(layers))
        if zero_init:
            for block in self.blocks:
                block.zero_init()

    def forward(self, fg: torch.Tensor, bg: torch.Tensor) -> torch.Tensor:
        if fg.shape[0] == 0:
            return fg
        x, ctx = fg.unsqueeze(0), bg.unsqueeze(0)
        for block in self.blocks:
            x = block(x, ctx)
        return x.squeeze(0)
