"""
A small trainable encoder-decoder over interleaved label-word sequences.

This is the desk-scale stand-in for fine-tuning a large speech model:
an attention encoder over the feature frames, a causal decoder over the
interleaved token stream, next-token cross-entropy over the whole
sequence (optionally over label tokens only), early stopping on a
held-out slice, and token-budgeted batches of length-sorted turns.

Trained models satisfy the harness's SequenceModel interface and plug
straight into the constrained decoder.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import torch
from torch import nn

from ..codec import (
    InterleavedSequence,
    LabelSpace,
    Scheme,
    Tokenizer,
    Vocabulary,
    build_vocabulary,
    encode_words,
    space_for,
    word_tokenizer,
)
from ..core import Corpus
from .model import AudioFeatures


class DivergenceError(RuntimeError):
    """Training produced a non-finite evaluation loss."""


@dataclass(frozen=True)
class ToyConfig:
    """Model and optimization settings.

    The default learning rate matches the full-scale fine-tuning recipe;
    training this small model from scratch usually wants a larger one
    (the synthetic-corpus tests use 3e-4).
    """

    d_model: int = 128
    n_heads: int = 4
    enc_layers: int = 2
    dec_layers: int = 2
    ffn_dim: int = 256
    dropout: float = 0.0
    lr: float = 1e-5
    max_epochs: int = 40
    patience: int = 5
    batch_tokens: int = 256
    eval_fraction: float = 0.05
    label_loss_only: bool = False
    grad_clip: float = 1.0
    seed: int = 0


@dataclass
class TrainLog:
    train_loss: list[float] = field(default_factory=list)
    eval_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1
    stopped_epoch: int = -1

    @property
    def best_eval(self) -> float:
        return self.eval_loss[self.best_epoch] if self.best_epoch >= 0 else math.inf


class _PositionalEncoding(nn.Module):
    def __init__(self, d_model: int, max_len: int = 4096):
        super().__init__()
        pos = torch.arange(max_len).unsqueeze(1)
        div = torch.exp(torch.arange(0, d_model, 2) * (-math.log(10000.0) / d_model))
        pe = torch.zeros(max_len, d_model)
        pe[:, 0::2] = torch.sin(pos * div)
        pe[:, 1::2] = torch.cos(pos * div)
        self.register_buffer("pe", pe, persistent=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return x + self.pe[: x.size(1)]


class ToyNet(nn.Module):
    """Feature-frame encoder + causal token decoder + output projection."""

    def __init__(self, vocab_size: int, n_channels: int, cfg: ToyConfig):
        super().__init__()
        self.cfg = cfg
        self.n_channels = n_channels
        d = cfg.d_model
        self.in_proj = nn.Linear(n_channels, d)
        self.pos = _PositionalEncoding(d)
        self.encoder = nn.TransformerEncoder(
            nn.TransformerEncoderLayer(d, cfg.n_heads, cfg.ffn_dim, cfg.dropout,
                                       batch_first=True, norm_first=True),
            cfg.enc_layers,
            enable_nested_tensor=False,
        )
        self.embed = nn.Embedding(vocab_size, d)
        self.decoder = nn.TransformerDecoder(
            nn.TransformerDecoderLayer(d, cfg.n_heads, cfg.ffn_dim, cfg.dropout,
                                       batch_first=True, norm_first=True),
            cfg.dec_layers,
        )
        self.out = nn.Linear(d, vocab_size)

    def encode(self, feats: torch.Tensor,
               pad_mask: Optional[torch.Tensor] = None) -> torch.Tensor:
        x = self.pos(self.in_proj(feats))
        return self.encoder(x, src_key_padding_mask=pad_mask)

    def decode(self, tokens: torch.Tensor, memory: torch.Tensor,
               memory_pad: Optional[torch.Tensor] = None,
               token_pad: Optional[torch.Tensor] = None) -> torch.Tensor:
        x = self.pos(self.embed(tokens))
        causal = torch.triu(
            torch.ones(tokens.size(1), tokens.size(1), dtype=torch.bool,
                       device=tokens.device), diagonal=1)
        y = self.decoder(x, memory, tgt_mask=causal,
                         tgt_key_padding_mask=token_pad,
                         memory_key_padding_mask=memory_pad)
        return self.out(y)


class ToyModel:
    """SequenceModel wrapper around a trained :class:`ToyNet`."""

    def __init__(self, net: ToyNet, vocab: Vocabulary, scheme: Scheme,
                 task: Optional[str] = None):
        self.net = net.eval()
        self.vocab = vocab
        self.scheme = scheme
        self.task = task

    def encode_audio(self, features: AudioFeatures) -> torch.Tensor:
        with torch.no_grad():
            feats = torch.from_numpy(np.ascontiguousarray(features.data)) \
                .float().unsqueeze(0)
            return self.net.encode(feats)

    def decode_step(self, prefix: Sequence[int], state: torch.Tensor) -> np.ndarray:
        with torch.no_grad():
            tokens = torch.tensor([list(prefix)], dtype=torch.long)
            logits = self.net.decode(tokens, state)
        return logits[0, -1].numpy()

    # -- checkpointing ------------------------------------------------

    def save(self, ckpt_dir: Union[str, Path]) -> None:
        ckpt_dir = Path(ckpt_dir)
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        config = {
            "toy": asdict(self.net.cfg),
            "n_channels": self.net.n_channels,
            "scheme": self.scheme.value,
            "task": self.task,
        }
        (ckpt_dir / "config.json").write_text(
            json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.vocab.save(ckpt_dir / "vocab.json")
        torch.save(self.net.state_dict(), ckpt_dir / "weights.pt")

    @classmethod
    def load(cls, ckpt_dir: Union[str, Path]) -> "ToyModel":
        ckpt_dir = Path(ckpt_dir)
        config = json.loads((ckpt_dir / "config.json").read_text(encoding="utf-8"))
        vocab = Vocabulary.load(ckpt_dir / "vocab.json")
        net = ToyNet(vocab.size, config["n_channels"], ToyConfig(**config["toy"]))
        net.load_state_dict(torch.load(ckpt_dir / "weights.pt",
                                       weights_only=True))
        return cls(net, vocab, Scheme(config["scheme"]), config.get("task"))


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class _Example:
    ids: list[int]
    label_mask: list[bool]  # over targets ids[1:]
    feats: np.ndarray


def _build_examples(corpus: Corpus, features: dict[str, AudioFeatures],
                    vocab: Vocabulary, scheme: Scheme, space: LabelSpace,
                    tokenizer: Tokenizer) -> list[_Example]:
    # Each source is one turn here; going through the word sequences
    # directly keeps simplex-task corpora (no prototypes -> no
    # materializable IUs) trainable.
    examples = []
    for src in corpus.sources:
        seq = encode_words(src.words, scheme, tokenizer, space)
        ids = vocab.ids(seq.tokens)
        label_mask = _target_label_mask(seq)
        examples.append(_Example(ids, label_mask, features[src.source_id].data))
    return examples


def _target_label_mask(seq: InterleavedSequence) -> list[bool]:
    mask = [False] * (len(seq.tokens) - 1)
    for pos in seq.label_positions:
        mask[pos - 1] = True  # predicting tokens[pos] from tokens[:pos]
    return mask


def _make_batches(examples: list[_Example], batch_tokens: int) -> list[list[int]]:
    order = sorted(range(len(examples)), key=lambda i: len(examples[i].ids))
    batches: list[list[int]] = []
    current: list[int] = []
    used = 0
    for i in order:
        n = len(examples[i].ids)
        if current and used + n > batch_tokens:
            batches.append(current)
            current, used = [], 0
        current.append(i)
        used += n
    if current:
        batches.append(current)
    return batches


def _collate(examples: list[_Example], idxs: list[int], pad_id: int):
    batch = [examples[i] for i in idxs]
    max_t = max(len(e.ids) for e in batch)
    max_f = max(e.feats.shape[0] for e in batch)
    n_ch = batch[0].feats.shape[1]
    tokens = torch.full((len(batch), max_t), pad_id, dtype=torch.long)
    loss_mask = torch.zeros((len(batch), max_t - 1), dtype=torch.bool)
    feats = torch.zeros((len(batch), max_f, n_ch))
    feat_pad = torch.ones((len(batch), max_f), dtype=torch.bool)
    for r, e in enumerate(batch):
        tokens[r, : len(e.ids)] = torch.tensor(e.ids)
        loss_mask[r, : len(e.label_mask)] = torch.tensor(e.label_mask)
        feats[r, : e.feats.shape[0]] = torch.from_numpy(
            np.ascontiguousarray(e.feats)).float()
        feat_pad[r, : e.feats.shape[0]] = False
    return tokens, loss_mask, feats, feat_pad


def _batch_loss(net: ToyNet, tokens, loss_mask, feats, feat_pad, pad_id: int,
                label_only: bool) -> torch.Tensor:
    memory = net.encode(feats, feat_pad)
    token_pad = tokens == pad_id
    logits = net.decode(tokens[:, :-1], memory, feat_pad, token_pad[:, :-1])
    targets = tokens[:, 1:]
    keep = ~token_pad[:, 1:]
    if label_only:
        keep = keep & loss_mask
    flat = nn.functional.cross_entropy(
        logits.reshape(-1, logits.size(-1)), targets.reshape(-1),
        reduction="none")
    keep_flat = keep.reshape(-1)
    return flat[keep_flat].mean() if keep_flat.any() else flat.sum() * 0.0


def train_toy(
    config: ToyConfig,
    corpus: Corpus,
    features: dict[str, AudioFeatures],
    scheme: Scheme,
    task: Optional[str] = None,
    tokenizer: Tokenizer = word_tokenizer,
) -> tuple[ToyModel, TrainLog]:
    """Train on a per-source-turn corpus with aligned features.

    Each corpus source must be one turn, with its feature matrix under
    the same key.  A held-out eval slice drives early stopping; a
    non-finite eval loss aborts with diagnostics.  Fixed seeds give
    reproducible runs up to backend numerics.
    """
    space = space_for(task)
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)

    base_tokens = sorted({t for w in _corpus_texts(corpus) for t in tokenizer(w)})
    vocab = build_vocabulary(base_tokens, scheme, space)
    examples = _build_examples(corpus, features, vocab, scheme, space, tokenizer)
    if len(examples) < 2:
        raise ValueError("need at least 2 turns to split off an eval slice")

    order = rng.permutation(len(examples))
    n_eval = max(1, round(config.eval_fraction * len(examples)))
    eval_idx = [int(i) for i in order[:n_eval]]
    train_idx = [int(i) for i in order[n_eval:]]

    n_channels = examples[0].feats.shape[1]
    net = ToyNet(vocab.size, n_channels, config)
    optim = torch.optim.Adam(net.parameters(), lr=config.lr)

    train_ex = [examples[i] for i in train_idx]
    eval_ex = [examples[i] for i in eval_idx]
    batches = _make_batches(train_ex, config.batch_tokens)
    eval_batches = _make_batches(eval_ex, config.batch_tokens)

    log = TrainLog()
    best_state = None
    best_eval = math.inf
    epoch = -1  # max_epochs=0 leaves an untrained model (chance level)
    for epoch in range(config.max_epochs):
        net.train()
        epoch_losses = []
        for b in rng.permutation(len(batches)):
            tokens, mask, feats, feat_pad = _collate(train_ex, batches[int(b)],
                                                     vocab.pad_id)
            optim.zero_grad()
            loss = _batch_loss(net, tokens, mask, feats, feat_pad, vocab.pad_id,
                               config.label_loss_only)
            loss.backward()
            nn.utils.clip_grad_norm_(net.parameters(), config.grad_clip)
            optim.step()
            epoch_losses.append(float(loss.detach()))
        log.train_loss.append(float(np.mean(epoch_losses)))

        net.eval()
        with torch.no_grad():
            losses = []
            for idxs in eval_batches:
                tokens, mask, feats, feat_pad = _collate(eval_ex, idxs,
                                                         vocab.pad_id)
                losses.append(float(_batch_loss(net, tokens, mask, feats,
                                                feat_pad, vocab.pad_id,
                                                config.label_loss_only)))
        eval_loss = float(np.mean(losses))
        log.eval_loss.append(eval_loss)
        if not math.isfinite(eval_loss):
            raise DivergenceError(
                f"eval loss {eval_loss} at epoch {epoch}; "
                f"train losses: {log.train_loss[-3:]}")
        if eval_loss < best_eval - 1e-6:
            best_eval = eval_loss
            log.best_epoch = epoch
            best_state = {k: v.detach().clone()
                          for k, v in net.state_dict().items()}
        elif epoch - log.best_epoch >= config.patience:
            break
    log.stopped_epoch = epoch

    if best_state is not None:
        net.load_state_dict(best_state)
    return ToyModel(net, vocab, scheme, task), log


def _corpus_texts(corpus: Corpus):
    for w in corpus.words():
        yield w.text
