"""TorchScript checkpoint loading and the offline test checkpoint.

A usable checkpoint is any TorchScript archive exposing

    embed_dim: int        output feature dimension
    image_size: int       square input edge for encode_image
    context_length: int   token count for encode_text
    encode_image(float32 [N, 3, image_size, image_size]) -> [N, embed_dim]
    encode_text(int64 [N, context_length]) -> [N, embed_dim]

Real histopathology checkpoints are exported to this contract once and
then used offline.  `make_test_checkpoint` builds a tiny random-projection
stand-in with the same contract so every code path runs without network
access or model downloads.
"""

from __future__ import annotations

import torch

from .errors import ModelError

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
VOCAB_SIZE = 259  # pad, bos, eos, then one id per byte value


def tokenize(text: str, context_length: int) -> torch.Tensor:
    """Byte-level ids: BOS, one id per UTF-8 byte, EOS, zero padding."""
    if context_length < 3:
        raise ModelError(f"context_length must be >= 3, got {context_length}")
    body = [3 + b for b in text.encode("utf-8")][: context_length - 2]
    ids = [BOS_ID] + body + [EOS_ID]
    ids += [PAD_ID] * (context_length - len(ids))
    return torch.tensor(ids, dtype=torch.int64)


def tokenize_batch(texts: list[str], context_length: int) -> torch.Tensor:
    return torch.stack([tokenize(t, context_length) for t in texts])


class _ToyDualEncoder(torch.nn.Module):
    """Linear image projection + mean-pooled byte embeddings."""

    def __init__(self, embed_dim: int, image_size: int, context_length: int,
                 seed: int):
        super().__init__()
        self.embed_dim = embed_dim
        self.image_size = image_size
        self.context_length = context_length
        gen = torch.Generator().manual_seed(seed)
        flat = 3 * image_size * image_size
        self.image_proj = torch.nn.Parameter(
            torch.randn(flat, embed_dim, generator=gen) / float(flat) ** 0.5
        )
        self.token_table = torch.nn.Parameter(
            torch.randn(VOCAB_SIZE, embed_dim, generator=gen)
        )

    def forward(self, pixels: torch.Tensor) -> torch.Tensor:
        return self.encode_image(pixels)

    @torch.jit.export
    def encode_image(self, pixels: torch.Tensor) -> torch.Tensor:
        flat = pixels.reshape(pixels.shape[0], -1)
        return flat @ self.image_proj

    @torch.jit.export
    def encode_text(self, tokens: torch.Tensor) -> torch.Tensor:
        emb = self.token_table[tokens]  # (N, L, D)
        mask = (tokens != 0).unsqueeze(-1).to(emb.dtype)  # 0 is the pad id
        summed = (emb * mask).sum(dim=1)
        counts = mask.sum(dim=1).clamp(min=1.0)
        return summed / counts


def make_test_checkpoint(
    path, embed_dim: int = 32, image_size: int = 32, context_length: int = 64,
    seed: int = 0,
) -> None:
    """Write a deterministic toy checkpoint satisfying the contract above."""
    module = _ToyDualEncoder(embed_dim, image_size, context_length, seed)
    module.eval()
    torch.jit.script(module).save(str(path))


def load_checkpoint(model_ref: str):
    """Load and contract-check a TorchScript checkpoint."""
    try:
        model = torch.jit.load(str(model_ref), map_location="cpu")
    except Exception as exc:  # torch raises a zoo of types here
        raise ModelError(f"cannot load checkpoint {model_ref!r}: {exc}") from exc
    model.eval()
    for attr in ("embed_dim", "image_size", "context_length"):
        if not hasattr(model, attr):
            raise ModelError(f"checkpoint lacks required attribute {attr!r}")
    dim = int(model.embed_dim)
    size = int(model.image_size)
    ctx = int(model.context_length)
    if dim < 1 or size < 1 or ctx < 3:
        raise ModelError(
            f"checkpoint declares unusable geometry: embed_dim={dim}, "
            f"image_size={size}, context_length={ctx}"
        )
    try:
        with torch.no_grad():
            img = model.encode_image(torch.zeros(1, 3, size, size))
            txt = model.encode_text(torch.zeros(1, ctx, dtype=torch.int64))
    except Exception as exc:
        raise ModelError(f"checkpoint probe failed: {exc}") from exc
    if tuple(img.shape) != (1, dim) or tuple(txt.shape) != (1, dim):
        raise ModelError(
            f"checkpoint output shapes {tuple(img.shape)}/{tuple(txt.shape)} "
            f"do not match embed_dim {dim}"
        )
    return model
