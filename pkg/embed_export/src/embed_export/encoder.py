"""Frozen text-encoder wrapper: load, pool, and a tiny offline model builder."""

from __future__ import annotations

from pathlib import Path
from typing import List

import numpy as np

from .errors import ExportError, ModelLoadError

POOLINGS = ("mean", "first-token")


class TextEncoder:
    """A frozen pretrained encoder plus its tokenizer.

    ``model_id`` is anything ``transformers`` can load: a hub identifier or a
    local directory. All weights stay frozen; inference runs under no_grad.
    """

    def __init__(self, model_id: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer

            self._torch = torch
            self.tokenizer = AutoTokenizer.from_pretrained(model_id)
            self.model = AutoModel.from_pretrained(model_id)
        except Exception as exc:
            raise ModelLoadError(f"cannot load text encoder {model_id!r}: {exc}") from exc
        self.model.eval()
        for p in self.model.parameters():
            p.requires_grad_(False)
        self.dim = int(self.model.config.hidden_size)

    def embed(self, title: str, pooling: str) -> np.ndarray:
        """One float32 vector per title under the chosen pooling rule."""
        if pooling not in POOLINGS:
            raise ExportError(f"unknown pooling {pooling!r}; expected one of {POOLINGS}")
        torch = self._torch
        enc = self.tokenizer(title, return_tensors="pt", truncation=True, max_length=64)
        with torch.no_grad():
            hidden = self.model(**enc).last_hidden_state[0]  # (tokens, dim)
        if pooling == "first-token":
            vec = hidden[0]
        else:
            mask = enc["attention_mask"][0].unsqueeze(-1).to(hidden.dtype)
            vec = (hidden * mask).sum(dim=0) / mask.sum()
        return vec.to(torch.float32).numpy()


def make_tiny_encoder(out_dir, seed: int = 0, hidden: int = 16, layers: int = 2) -> str:
    """Materialize a small randomly initialized encoder on disk.

    Character-level wordpiece vocabulary, so any ASCII title tokenizes without
    network access. Returns the directory path, usable as a model identifier.
    """
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    chars = "abcdefghijklmnopqrstuvwxyz0123456789"
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    vocab += list(chars) + [f"##{c}" for c in chars]
    (out / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(out / "vocab.txt"), do_lower_case=True)
    tokenizer.save_pretrained(out)
    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden,
        num_hidden_layers=layers,
        num_attention_heads=2,
        intermediate_size=2 * hidden,
        max_position_embeddings=64,
    )
    BertModel(config).save_pretrained(out)
    return str(out)
