# tests/network/test_transformer.py
import pytest
import torch

from agency_count.network.transformer import ForegroundTransformer

pytestmark = pytest.mark.unit


@pytest.fixture
def transformer():
    torch.manual_seed(0)
    return ForegroundTransformer(dim=8, heads=1, layers=1, hidden=16).eval()


def test_empty_foreground_passes_through(transformer):
    fg = torch.zeros(0, 8)
    assert transformer(fg, torch.rand(5, 8)).shape == (0, 8)


def test_empty_background_still_applies_self_attention(transformer):
    fg = torch.rand(3, 8)
    out = transformer(fg, torch.zeros(0, 8))
    assert out.shape == (3, 8)
    assert not torch.allclose(out, fg)


def test_foreground_permutation_equivariance(transformer):
    g = torch.Generator().manual_seed(1)
    fg, bg = torch.rand(3, 8, generator=g), torch.rand(5, 8, generator=g)
    perm = torch.tensor([2, 0, 1])
    out = transformer(fg, bg)
    assert out.shape == (3, 8)
    torch.testing.assert_close(transformer(fg[perm], bg), out[perm])


def test_background_order_does_not_matter(transformer):
    g = torch.Generator().manual_seed(2)
    fg, bg = torch.rand(3, 8, generator=g), torch.rand(5, 8, generator=g)
    torch.testing.assert_close(transformer(fg, bg.flip(0)), transformer(fg, bg))


def test_background_is_read_only(transformer):
    fg, bg = torch.rand(3, 8), torch.rand(5, 8)
    before = bg.clone()
    transformer(fg, bg)
    assert torch.equal(bg, before)


def test_zero_initialized_blocks_are_identity():
    block = ForegroundTransformer(dim=8, heads=2, layers=2, hidden=16, zero_init=True)
    fg, bg = torch.rand(4, 8), torch.rand(6, 8)
    assert torch.equal(block(fg, bg), fg)


def test_background_changes_foreground(transformer):
    g = torch.Generator().manual_seed(3)
    fg = torch.rand(3, 8, generator=g)
    a = transformer(fg, torch.rand(5, 8, generator=g))
    b = transformer(fg, torch.rand(5, 8, generator=g) + 3.0)
    assert not torch.allclose(a, b)
