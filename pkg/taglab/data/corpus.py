from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Union

from beartype import beartype

from taglab.config import logger
from taglab.errors import CorpusFormatError

PAD_TOKEN = "<pad>"


@dataclass(frozen=True)
class TaggedSentence:
    """
    A pre-tokenized sentence with optional gold tags.

    Multi-word expressions are stored as a single underscore-joined token, so a
    token never contains whitespace.

    Parameters
    ----------
    tokens : tuple of str
        Surface strings, at least one.
    tags : tuple of str, optional
        Gold tag symbols, one per token, or ``None`` for unlabeled input.

    Raises
    ------
    ValueError
        If the sentence is empty, a token contains whitespace, or the tag
        sequence has a different length.
    """

    tokens: tuple[str, ...]
    tags: Optional[tuple[str, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.tags is not None:
            object.__setattr__(self, "tags", tuple(self.tags))

        if len(self.tokens) == 0:
            raise ValueError("A sentence must contain at least one token.")

        for token in self.tokens:
            if not token or any(ch.isspace() for ch in token):
                raise ValueError(f"Invalid token {token!r}: tokens must be non-empty, no spaces.")

        if self.tags is not None and len(self.tags) != len(self.tokens):
            raise ValueError(
                f"Got {len(self.tags)} tags for {len(self.tokens)} tokens: {self.tokens}"
            )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def is_labeled(self) -> bool:
        return self.tags is not None


class AffixSet(NamedTuple):
    p2: str
    p3: str
    s2: str
    s3: str


AFFIX_KINDS: tuple[str, ...] = AffixSet._fields


@beartype
def affixes(word: str) -> AffixSet:
    """
    Leading and trailing two- and three-character strings of a word.

    Slicing is done on Unicode code points. Words shorter than three characters
    use the word itself for every affix.

    Parameters
    ----------
    word : str
        Non-empty surface string.

    Returns
    -------
    AffixSet

    Raises
    ------
    ValueError
        If ``word`` is empty.

    Examples
    --------
    >>> affixes("makan")
    AffixSet(p2='ma', p3='mak', s2='an', s3='kan')
    >>> affixes("di")
    AffixSet(p2='di', p3='di', s2='di', s3='di')
    """
    if not word:
        raise ValueError("Cannot take affixes of an empty word.")

    if len(word) < 3:
        return AffixSet(word, word, word, word)

    return AffixSet(word[:2], word[:3], word[-2:], word[-3:])


@beartype
def normalize(word: str, keep_case: bool = False) -> str:
    """Lowercase ``word`` unless ``keep_case`` is set."""
    return word if keep_case else word.lower()


@beartype
def parse_vertical_corpus(text: str, labeled: bool = True) -> list[TaggedSentence]:
    """
    Parse a vertical-format corpus.

    Each non-blank line is ``token<TAB>tag`` and a blank line ends a sentence.
    A final sentence without a trailing blank line is kept.

    Parameters
    ----------
    text : str
        Corpus contents.
    labeled : bool, optional
        When ``False``, each line holds a token and any second column is
        ignored; the returned sentences carry no tags.

    Returns
    -------
    list of TaggedSentence
        Sentences in file order. An empty input gives an empty list.

    Raises
    ------
    CorpusFormatError
        If a labeled line does not have exactly two tab-separated fields, or a
        line holds only whitespace.
    """
    sentences: list[TaggedSentence] = []
    tokens: list[str] = []
    tags: list[str] = []

    def flush() -> None:
        if tokens:
            sentences.append(TaggedSentence(tuple(tokens), tuple(tags) if labeled else None))
            tokens.clear()
            tags.clear()

    for line_number, raw_line in enumerate(text.split("\n"), start=1):
        line = raw_line.rstrip("\r")
        if not line:
            flush()
            continue
        if not line.strip():
            raise CorpusFormatError(f"whitespace-only line {line!r}", line_number)

        fields = line.split("\t")
        if labeled:
            if len(fields) != 2 or not fields[0] or not fields[1]:
                raise CorpusFormatError(
                    f"expected 'token<TAB>tag', got {len(fields)} field(s): {line!r}",
                    line_number,
                )
            token, tag = fields
            tags.append(tag)
        else:
            token = fields[0]

        if any(ch.isspace() for ch in token) or not token:
            raise CorpusFormatError(f"token contains whitespace: {token!r}", line_number)
        tokens.append(token)

    flush()
    logger.debug(f"Parsed {len(sentences)} sentences")
    return sentences


def serialize_vertical_corpus(sentences: list[TaggedSentence]) -> str:
    """Inverse of :func:`parse_vertical_corpus`."""
    lines: list[str] = []
    for sentence in sentences:
        if sentence.tags is None:
            lines.extend(sentence.tokens)
        else:
            lines.extend(f"{tok}\t{tag}" for tok, tag in zip(sentence.tokens, sentence.tags))
        lines.append("")

    return "".join(f"{line}\n" for line in lines)


def read_corpus(path: Union[str, Path], labeled: bool = True) -> list[TaggedSentence]:
    path = Path(path)
    logger.info(f"Reading corpus from {path}")
    return parse_vertical_corpus(path.read_text(encoding="utf-8"), labeled=labeled)


def write_corpus(path: Union[str, Path], sentences: list[TaggedSentence]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(serialize_vertical_corpus(sentences), encoding="utf-8")
    logger.debug(f"Wrote {len(sentences)} sentences to {path}")
    return path
