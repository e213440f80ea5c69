"""
Label-token codec: maps prosodic label combinations to tokens under the
three representation schemes and builds/parses the interleaved
label-word training sequences.

Schemes
-------
compact
    One atomic token per label combination, e.g. ``<B|CM|E>``.  For the
    full three-feature space that is exactly 12 tokens.
bits
    One atomic token per prosodic feature value, emitted in fixed
    (boundary, prototype, emphasis) order, e.g. ``<I> <PD> <N>``.
    7 tokens for the full space (2 + 3 + 2).
raw
    A tag string per combination, e.g. ``"⟦b-cm-e⟧"``, spelled from a
    small inventory of reusable pieces so an existing tokenizer splits
    it into stable sub-tokens instead of new atomic entries.

The fixed combination order is the itertools-product order of
:meth:`LabelCombination.all_combinations`; see the vocabulary manifest
for the exact token-id assignment consumed by the decode harness.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from .core import Boundary, Emphasis, LabelCombination, Prototype, Turn, Word


class Scheme(str, Enum):
    RAW = "raw"
    COMPACT = "compact"
    BITS = "bits"


class CodecError(ValueError):
    """Malformed label block or interleaved sequence."""


# ---------------------------------------------------------------------------
# Label spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Feature:
    """One prosodic feature with its ordered value codes."""

    name: str
    codes: tuple[str, ...]


BOUNDARY_FEATURE = Feature("boundary", tuple(b.value for b in Boundary))
PROTOTYPE_FEATURE = Feature("prototype", tuple(p.value for p in Prototype))
EMPHASIS_FEATURE = Feature("emphasis", tuple(e.value for e in Emphasis))


@dataclass(frozen=True)
class LabelSpace:
    """The set of features the codec encodes per word.

    The full space is the (boundary, prototype, emphasis) triple; the
    single-feature spaces back the simplex recognition tasks.
    """

    features: tuple[Feature, ...]

    @property
    def name(self) -> str:
        if len(self.features) == 3:
            return "full"
        return self.features[0].name

    def combinations(self) -> tuple[tuple[str, ...], ...]:
        """All code tuples in fixed product order."""
        return tuple(itertools.product(*(f.codes for f in self.features)))

    def codes_of(self, word: Word) -> tuple[str, ...]:
        """This word's value codes for the space's features.

        Raises if any required feature is unannotated.
        """
        out = []
        for f in self.features:
            value = getattr(word, f.name)
            if value is None:
                raise CodecError(f"word {word.text!r} has no {f.name} label")
            out.append(value.value)
        return tuple(out)

    def label_of(self, codes: Sequence[str]) -> Union[LabelCombination, str]:
        """Code tuple back to a domain label.

        Full space yields a :class:`LabelCombination`; a simplex space
        yields the bare value code.
        """
        if len(codes) != len(self.features):
            raise CodecError(f"expected {len(self.features)} codes, got {len(codes)}")
        if len(self.features) == 3:
            return LabelCombination(Boundary(codes[0]), Prototype(codes[1]),
                                    Emphasis(codes[2]))
        return codes[0]


FULL_SPACE = LabelSpace((BOUNDARY_FEATURE, PROTOTYPE_FEATURE, EMPHASIS_FEATURE))

SIMPLEX_SPACES = {
    "boundary": LabelSpace((BOUNDARY_FEATURE,)),
    "prototype": LabelSpace((PROTOTYPE_FEATURE,)),
    "emphasis": LabelSpace((EMPHASIS_FEATURE,)),
}


def space_for(task: Optional[str]) -> LabelSpace:
    """Label space for a recognition task name (None = the full triple)."""
    if task is None or task == "full":
        return FULL_SPACE
    try:
        return SIMPLEX_SPACES[task]
    except KeyError:
        raise ValueError(f"unknown task {task!r}; expected one of "
                         f"{sorted(SIMPLEX_SPACES)} or 'full'") from None


# ---------------------------------------------------------------------------
# Token surfaces
# ---------------------------------------------------------------------------

RAW_OPEN = "⟦"   # ⟦
RAW_CLOSE = "⟧"  # ⟧
RAW_SEP = "-"


def _compact_token(codes: Sequence[str]) -> str:
    return "<" + "|".join(c.upper() for c in codes) + ">"


def _bit_token(code: str) -> str:
    return f"<{code.upper()}>"


def _raw_tag(codes: Sequence[str]) -> str:
    return RAW_OPEN + RAW_SEP.join(codes) + RAW_CLOSE


def _raw_pieces(codes: Sequence[str]) -> tuple[str, ...]:
    pieces: list[str] = [RAW_OPEN]
    for i, c in enumerate(codes):
        if i:
            pieces.append(RAW_SEP)
        pieces.append(c)
    pieces.append(RAW_CLOSE)
    return tuple(pieces)


def label_vocabulary(scheme: Scheme, space: LabelSpace = FULL_SPACE) -> tuple[str, ...]:
    """The ordered label vocabulary of a scheme.

    compact: one token per combination (12 for the full space);
    bits: one token per feature value (7 for the full space);
    raw: one tag string per combination (each decomposing into pieces).
    """
    if scheme is Scheme.COMPACT:
        return tuple(_compact_token(c) for c in space.combinations())
    if scheme is Scheme.BITS:
        return tuple(_bit_token(c) for f in space.features for c in f.codes)
    return tuple(_raw_tag(c) for c in space.combinations())


def scheme_vocab_tokens(scheme: Scheme, space: LabelSpace = FULL_SPACE) -> tuple[str, ...]:
    """The tokens a scheme adds to the base vocabulary.

    compact and bits add their label vocabulary as new atomic entries;
    raw adds only the reusable piece inventory the tag strings are
    spelled from.
    """
    if scheme is Scheme.RAW:
        codes = [c for f in space.features for c in f.codes]
        return (RAW_OPEN, RAW_CLOSE, RAW_SEP, *codes)
    return label_vocabulary(scheme, space)


def combo_to_tokens(
    combo: Union[LabelCombination, Sequence[str]],
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
) -> tuple[str, ...]:
    """Token block for one label.

    Accepts a :class:`LabelCombination` (full space) or a code tuple.
    compact blocks have length 1, bits blocks one token per feature in
    fixed order, raw blocks the tag's piece sequence.
    """
    codes = combo.codes if isinstance(combo, LabelCombination) else tuple(combo)
    if len(codes) != len(space.features):
        raise CodecError(f"label has {len(codes)} codes, space has "
                         f"{len(space.features)} features")
    for f, c in zip(space.features, codes):
        if c not in f.codes:
            raise CodecError(f"{c!r} is not a {f.name} code")
    if scheme is Scheme.COMPACT:
        return (_compact_token(codes),)
    if scheme is Scheme.BITS:
        return tuple(_bit_token(c) for c in codes)
    return _raw_pieces(codes)


def tokens_to_combo(
    block: Sequence[str],
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
) -> Union[LabelCombination, str]:
    """Exact inverse of :func:`combo_to_tokens`.

    Raises :class:`CodecError` on wrong arity, unknown tokens, or
    out-of-order bits/pieces, naming the offending position.
    """
    grammar = decode_grammar(scheme, space)
    if len(block) != len(grammar):
        raise CodecError(f"{scheme.value} block has {len(block)} tokens, "
                         f"expected {len(grammar)}")
    for pos, (token, allowed) in enumerate(zip(block, grammar)):
        if token not in allowed:
            raise CodecError(f"position {pos}: token {token!r} not in "
                             f"{sorted(allowed)}")
    codes = _codes_from_block(block, scheme, space)
    return space.label_of(codes)


def _codes_from_block(block: Sequence[str], scheme: Scheme,
                      space: LabelSpace) -> tuple[str, ...]:
    if scheme is Scheme.COMPACT:
        inner = block[0][1:-1]
        return tuple(part.lower() for part in inner.split("|"))
    if scheme is Scheme.BITS:
        return tuple(t[1:-1].lower() for t in block)
    # raw: choice pieces sit between the separators
    return tuple(block[1 + 2 * i] for i in range(len(space.features)))


def decode_grammar(scheme: Scheme,
                   space: LabelSpace = FULL_SPACE) -> tuple[tuple[str, ...], ...]:
    """Per-position allowed tokens of one label block.

    This is what constrained inference masks against: compact has a
    single position over the whole label vocabulary, bits one position
    per feature, raw one position per tag piece (brackets and
    separators admit exactly one token).
    """
    if scheme is Scheme.COMPACT:
        return (label_vocabulary(scheme, space),)
    if scheme is Scheme.BITS:
        return tuple(tuple(_bit_token(c) for c in f.codes) for f in space.features)
    slots: list[tuple[str, ...]] = [(RAW_OPEN,)]
    for i, f in enumerate(space.features):
        if i:
            slots.append((RAW_SEP,))
        slots.append(f.codes)
    slots.append((RAW_CLOSE,))
    return tuple(slots)


def block_arity(scheme: Scheme, space: LabelSpace = FULL_SPACE) -> int:
    """Number of tokens in one label block (constant per scheme/space)."""
    return len(decode_grammar(scheme, space))


# ---------------------------------------------------------------------------
# Interleaved sequences
# ---------------------------------------------------------------------------

BOS = "<s>"
EOS = "</s>"
PAD = "<pad>"
UNK = "<unk>"
SPECIALS = (PAD, BOS, EOS, UNK)

Tokenizer = Callable[[str], Sequence[str]]


def word_tokenizer(word: str) -> tuple[str, ...]:
    """Default word-level tokenizer: every word is one token."""
    return (word,)


@dataclass(frozen=True)
class InterleavedSequence:
    """Token stream alternating label block then word block per word,
    wrapped by the start/end specials."""

    tokens: tuple[str, ...]
    n_words: int
    label_positions: tuple[int, ...]  # indices of label tokens (loss masking)

    @property
    def token_count(self) -> int:
        return len(self.tokens)


def encode_words(
    words: Sequence[Word],
    scheme: Scheme,
    tokenizer: Tokenizer = word_tokenizer,
    space: LabelSpace = FULL_SPACE,
) -> InterleavedSequence:
    """Interleave each word's label block before its word tokens.

    The reported ``token_count`` is exact: start/end specials plus the
    sum of all block lengths (it backs the turn compiler's token
    budget).
    """
    tokens: list[str] = [BOS]
    label_positions: list[int] = []
    n_words = 0
    for word in words:
        codes = space.codes_of(word)
        block = combo_to_tokens(codes, scheme, space)
        label_positions.extend(range(len(tokens), len(tokens) + len(block)))
        tokens.extend(block)
        word_tokens = tuple(tokenizer(word.text))
        if not word_tokens:
            raise CodecError(f"tokenizer produced no tokens for {word.text!r}")
        tokens.extend(word_tokens)
        n_words += 1
    tokens.append(EOS)
    return InterleavedSequence(tuple(tokens), n_words, tuple(label_positions))


def encode_turn(
    turn: Turn,
    scheme: Scheme,
    tokenizer: Tokenizer = word_tokenizer,
    space: LabelSpace = FULL_SPACE,
) -> InterleavedSequence:
    """:func:`encode_words` over a turn's word sequence."""
    return encode_words(turn.words, scheme, tokenizer, space)


def decode_sequence(
    seq: Union[InterleavedSequence, Sequence[str]],
    words: Sequence[str],
    scheme: Scheme,
    tokenizer: Tokenizer = word_tokenizer,
    space: LabelSpace = FULL_SPACE,
) -> list[Union[LabelCombination, str]]:
    """Parse an interleaved sequence back into one label per word.

    Rejects any alternation violation: wrong specials, label tokens
    where word tokens are due, or trailing material.
    """
    tokens = seq.tokens if isinstance(seq, InterleavedSequence) else tuple(seq)
    arity = block_arity(scheme, space)
    pos = 0
    if not tokens or tokens[0] != BOS:
        raise CodecError(f"sequence must start with {BOS!r}")
    pos += 1
    labels: list[Union[LabelCombination, str]] = []
    for i, word in enumerate(words):
        block = tokens[pos:pos + arity]
        try:
            labels.append(tokens_to_combo(block, scheme, space))
        except CodecError as exc:
            raise CodecError(f"word {i} ({word!r}): {exc}") from None
        pos += arity
        expect = tuple(tokenizer(word))
        got = tokens[pos:pos + len(expect)]
        if got != expect:
            raise CodecError(f"word {i}: expected word tokens {expect}, got {got}")
        pos += len(expect)
    if pos >= len(tokens) or tokens[pos] != EOS:
        raise CodecError(f"expected {EOS!r} after word {len(words) - 1}, "
                         f"got {tokens[pos:pos + 1]}")
    if pos + 1 != len(tokens):
        raise CodecError(f"{len(tokens) - pos - 1} trailing tokens after {EOS!r}")
    return labels


def sequence_token_counter(
    scheme: Scheme,
    tokenizer: Tokenizer = word_tokenizer,
    space: LabelSpace = FULL_SPACE,
) -> Callable[[Sequence[Word]], int]:
    """Token counter for candidate turns (labels need not be present:
    label blocks have constant arity per scheme)."""
    arity = block_arity(scheme, space)

    def count(words: Sequence[Word]) -> int:
        return 2 + sum(arity + len(tokenizer(w.text)) for w in words)

    return count


# ---------------------------------------------------------------------------
# Vocabulary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    """Ordered token list; a token's id is its index.

    Layout: specials, then base (word) tokens, then the scheme's label
    tokens appended at the end.  The manifest serialization is
    bit-exact and is the contract consumed by the decode harness.
    """

    tokens: tuple[str, ...]
    scheme: Scheme
    space_name: str = "full"

    def __post_init__(self) -> None:
        if len(set(self.tokens)) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def index(self) -> dict[str, int]:
        # dataclass is frozen; cache via __dict__ side channel
        cached = self.__dict__.get("_index")
        if cached is None:
            cached = {t: i for i, t in enumerate(self.tokens)}
            self.__dict__["_index"] = cached
        return cached

    def id(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise KeyError(f"token {token!r} not in vocabulary") from None

    def ids(self, tokens: Sequence[str]) -> list[int]:
        unk = self.index[UNK]
        return [self.index.get(t, unk) for t in tokens]

    @property
    def pad_id(self) -> int:
        return self.index[PAD]

    @property
    def bos_id(self) -> int:
        return self.index[BOS]

    @property
    def eos_id(self) -> int:
        return self.index[EOS]

    def to_manifest(self) -> dict:
        return {
            "format": "prosotag-vocabulary",
            "version": 1,
            "scheme": self.scheme.value,
            "space": self.space_name,
            "tokens": list(self.tokens),
        }

    @classmethod
    def from_manifest(cls, manifest: dict) -> "Vocabulary":
        if manifest.get("format") != "prosotag-vocabulary":
            raise ValueError("not a vocabulary manifest")
        return cls(tuple(manifest["tokens"]), Scheme(manifest["scheme"]),
                   manifest.get("space", "full"))

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(
            json.dumps(self.to_manifest(), ensure_ascii=False, indent=2,
                       sort_keys=True) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Vocabulary":
        return cls.from_manifest(json.loads(Path(path).read_text(encoding="utf-8")))


def build_vocabulary(
    base_tokens: Sequence[str],
    scheme: Scheme,
    space: LabelSpace = FULL_SPACE,
) -> Vocabulary:
    """Specials + deduplicated base tokens + the scheme's label tokens."""
    seen = dict.fromkeys(SPECIALS)
    for t in base_tokens:
        seen.setdefault(t)
    for t in scheme_vocab_tokens(scheme, space):
        seen.setdefault(t)
    return Vocabulary(tuple(seen), scheme, space.name)
