from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Literal, Optional

from beartype import beartype

from taglab.config import logger

from .corpus import AFFIX_KINDS, TaggedSentence, affixes, normalize

UNK = "<unk>"
PAD = "<pad>"
UNK_ID = 0
PAD_ID = 1

type LowercaseMode = Literal["lookups", "none-with-chars"]

FEATURE_NAMES: tuple[str, ...] = ("words", "prefix", "suffix", "chars")


@dataclass(frozen=True)
class FeatureFlags:
    """
    Which token features a tagger embeds, and how words are cased.

    ``lowercase_mode="lookups"`` lowercases word and affix lookups and keeps the
    original case for characters. ``"none-with-chars"`` skips lowercasing
    entirely whenever characters are embedded.
    """

    use_prefix: bool = False
    use_suffix: bool = False
    use_chars: bool = False
    lowercase_mode: LowercaseMode = "lookups"

    @property
    def keep_case(self) -> bool:
        return self.lowercase_mode == "none-with-chars" and self.use_chars

    @classmethod
    def from_names(cls, names: str, lowercase_mode: LowercaseMode = "lookups") -> "FeatureFlags":
        """Parse a comma-separated list such as ``"words,prefix,chars"``."""
        selected = {name.strip() for name in names.split(",") if name.strip()}
        unknown = selected - set(FEATURE_NAMES)
        if unknown:
            raise ValueError(f"Unknown feature(s) {sorted(unknown)}, expected {FEATURE_NAMES}")

        return cls(
            use_prefix="prefix" in selected,
            use_suffix="suffix" in selected,
            use_chars="chars" in selected,
            lowercase_mode=lowercase_mode,
        )

    @property
    def names(self) -> str:
        enabled = ["words"]
        enabled += ["prefix"] if self.use_prefix else []
        enabled += ["suffix"] if self.use_suffix else []
        enabled += ["chars"] if self.use_chars else []
        return ",".join(enabled)


def _symbol_table(symbols: list[str], reserved: tuple[str, ...] = (UNK, PAD)) -> dict[str, int]:
    table = {symbol: i for i, symbol in enumerate(reserved)}
    for symbol in sorted(symbols):
        table.setdefault(symbol, len(table))
    return table


@dataclass(frozen=True)
class Vocabulary:
    """
    Symbol tables for words, affixes, characters and tags.

    Words, each affix kind and characters reserve ``<unk>`` (id 0) and ``<pad>``
    (id 1). Tags are dense and have no reserved entries. Training counts are kept
    so thresholds can be inspected after the fact.

    Attributes
    ----------
    word_index : dict of str to int
    affix_index : dict of str to dict of str to int
        One table per affix kind (``p2``, ``p3``, ``s2``, ``s3``).
    char_index : dict of str to int
    tag_index : dict of str to int
    word_counts, char_counts, tag_counts : dict of str to int
    affix_counts : dict of str to dict of str to int
    word_min, affix_min : int
        Thresholds the vocabulary was built with.
    keep_case : bool
        Whether word and affix lookups are case-sensitive.
    """

    word_index: dict[str, int]
    affix_index: dict[str, dict[str, int]]
    char_index: dict[str, int]
    tag_index: dict[str, int]
    word_counts: dict[str, int] = field(default_factory=dict, repr=False)
    affix_counts: dict[str, dict[str, int]] = field(default_factory=dict, repr=False)
    char_counts: dict[str, int] = field(default_factory=dict, repr=False)
    tag_counts: dict[str, int] = field(default_factory=dict, repr=False)
    word_min: int = 2
    affix_min: int = 5
    keep_case: bool = False

    @property
    def tags(self) -> list[str]:
        return sorted(self.tag_index, key=self.tag_index.__getitem__)

    @property
    def n_words(self) -> int:
        return len(self.word_index)

    @property
    def n_chars(self) -> int:
        return len(self.char_index)

    @property
    def n_tags(self) -> int:
        return len(self.tag_index)

    def n_affixes(self, kind: str) -> int:
        return len(self.affix_index[kind])

    def word_of(self, word_id: int) -> str:
        return self._inverse(self.word_index)[word_id]

    def tag_of(self, tag_id: int) -> str:
        return self.tags[tag_id]

    @staticmethod
    def _inverse(table: dict[str, int]) -> list[str]:
        return sorted(table, key=table.__getitem__)

    def to_dict(self) -> dict[str, Any]:
        """Serializable form; symbol lists are ordered by id."""
        return {
            "words": self._inverse(self.word_index),
            "affixes": {kind: self._inverse(t) for kind, t in self.affix_index.items()},
            "chars": self._inverse(self.char_index),
            "tags": self.tags,
            "word_counts": dict(sorted(self.word_counts.items())),
            "affix_counts": {
                kind: dict(sorted(c.items())) for kind, c in sorted(self.affix_counts.items())
            },
            "char_counts": dict(sorted(self.char_counts.items())),
            "tag_counts": dict(sorted(self.tag_counts.items())),
            "word_min": self.word_min,
            "affix_min": self.affix_min,
            "keep_case": self.keep_case,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Vocabulary":
        def index(symbols: list[str]) -> dict[str, int]:
            return {symbol: i for i, symbol in enumerate(symbols)}

        return cls(
            word_index=index(data["words"]),
            affix_index={kind: index(symbols) for kind, symbols in data["affixes"].items()},
            char_index=index(data["chars"]),
            tag_index=index(data["tags"]),
            word_counts=dict(data.get("word_counts", {})),
            affix_counts={k: dict(v) for k, v in data.get("affix_counts", {}).items()},
            char_counts=dict(data.get("char_counts", {})),
            tag_counts=dict(data.get("tag_counts", {})),
            word_min=int(data.get("word_min", 2)),
            affix_min=int(data.get("affix_min", 5)),
            keep_case=bool(data.get("keep_case", False)),
        )


@beartype
def build_vocabulary(
    train: list[TaggedSentence],
    word_min: int = 2,
    affix_min: int = 5,
    keep_case: bool = False,
) -> Vocabulary:
    """
    Build symbol tables from training sentences.

    Words seen fewer than ``word_min`` times and affixes seen fewer than
    ``affix_min`` times are left out, so they map to ``<unk>`` at lookup time.
    Every character and every tag of the training data is included.

    Parameters
    ----------
    train : list of TaggedSentence
        Labeled training sentences.
    word_min : int, optional
        Minimum word count. The default of 2 drops singletons.
    affix_min : int, optional
        Minimum count per affix kind.
    keep_case : bool, optional
        Count words and affixes without lowercasing.

    Returns
    -------
    Vocabulary

    Raises
    ------
    ValueError
        If ``train`` is empty or contains unlabeled sentences.
    """
    if not train:
        raise ValueError("Cannot build a vocabulary from an empty training set.")

    word_counts: Counter[str] = Counter()
    affix_counts: dict[str, Counter[str]] = {kind: Counter() for kind in AFFIX_KINDS}
    char_counts: Counter[str] = Counter()
    tag_counts: Counter[str] = Counter()

    for sentence in train:
        if sentence.tags is None:
            raise ValueError("Training sentences must be labeled.")
        tag_counts.update(sentence.tags)
        for token in sentence.tokens:
            word = normalize(token, keep_case=keep_case)
            word_counts[word] += 1
            for kind, affix in zip(AFFIX_KINDS, affixes(word)):
                affix_counts[kind][affix] += 1
            char_counts.update(token)

    vocab = Vocabulary(
        word_index=_symbol_table([w for w, c in word_counts.items() if c >= word_min]),
        affix_index={
            kind: _symbol_table([a for a, c in counts.items() if c >= affix_min])
            for kind, counts in affix_counts.items()
        },
        char_index=_symbol_table(list(char_counts)),
        tag_index={tag: i for i, tag in enumerate(sorted(tag_counts))},
        word_counts=dict(word_counts),
        affix_counts={kind: dict(counts) for kind, counts in affix_counts.items()},
        char_counts=dict(char_counts),
        tag_counts=dict(tag_counts),
        word_min=word_min,
        affix_min=affix_min,
        keep_case=keep_case,
    )

    logger.info(
        f"Vocabulary: {vocab.n_words} words, {vocab.n_chars} chars, {vocab.n_tags} tags "
        f"(word_min={word_min}, affix_min={affix_min})"
    )
    return vocab


@dataclass(frozen=True)
class EncodedSentence:
    """Vocabulary ids for one sentence; ``tag_ids`` is ``None`` when unlabeled."""

    word_ids: tuple[int, ...]
    affix_ids: dict[str, tuple[int, ...]]
    char_ids: tuple[tuple[int, ...], ...]
    tag_ids: Optional[tuple[int, ...]] = None

    def __len__(self) -> int:
        return len(self.word_ids)


def encode_sentence(
    vocab: Vocabulary, sentence: TaggedSentence, flags: FeatureFlags = FeatureFlags()
) -> EncodedSentence:
    """
    Map a sentence onto vocabulary ids.

    Unknown words, affixes and characters map to ``<unk>``. Gold tags are mapped
    when present.

    Raises
    ------
    ValueError
        If a gold tag does not occur in the training tagset.
    """
    keep_case = flags.keep_case or vocab.keep_case
    words = [normalize(token, keep_case=keep_case) for token in sentence.tokens]

    word_ids = tuple(vocab.word_index.get(word, UNK_ID) for word in words)
    per_word = [affixes(word) for word in words]
    affix_ids = {
        kind: tuple(vocab.affix_index[kind].get(getattr(a, kind), UNK_ID) for a in per_word)
        for kind in AFFIX_KINDS
    }
    char_ids = tuple(
        tuple(vocab.char_index.get(ch, UNK_ID) for ch in token) for token in sentence.tokens
    )

    tag_ids = None
    if sentence.tags is not None:
        missing = [tag for tag in sentence.tags if tag not in vocab.tag_index]
        if missing:
            logger.error(f"Tags absent from the training tagset: {missing}")
            raise ValueError(f"Tag(s) {missing} do not occur in the training tagset.")
        tag_ids = tuple(vocab.tag_index[tag] for tag in sentence.tags)

    return EncodedSentence(word_ids, affix_ids, char_ids, tag_ids)
