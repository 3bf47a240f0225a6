from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Union

from beartype import beartype

from taglab.config import logger
from taglab.data.corpus import TaggedSentence, normalize


def _most_common(counts: Counter[str]) -> str:
    # highest count first, then lexicographically smallest tag
    return min(counts.items(), key=lambda item: (-item[1], item[0]))[0]


@dataclass(frozen=True)
class MajorModel:
    """Predicts the training majority tag for every token."""

    majority_tag: str

    def to_text(self) -> str:
        return f"MAJOR {self.majority_tag}\n"


@dataclass(frozen=True)
class MemoModel:
    """
    Remembers the most frequent training tag of every (lowercased) word.

    Unseen words get the majority tag.
    """

    word_tags: dict[str, str] = field(repr=False)
    fallback: str

    def to_text(self) -> str:
        lines = [f"MEMO {self.fallback}"]
        lines += [f"{word}\t{tag}" for word, tag in sorted(self.word_tags.items())]
        return "".join(f"{line}\n" for line in lines)


type BaselineModel = Union[MajorModel, MemoModel]


def _tag_counts(train: list[TaggedSentence]) -> Counter[str]:
    if not train:
        raise ValueError("Cannot fit a baseline on an empty training set.")

    counts: Counter[str] = Counter()
    for sentence in train:
        if sentence.tags is None:
            raise ValueError("Baselines are fitted on labeled sentences only.")
        counts.update(sentence.tags)
    return counts


@beartype
def fit_major(train: list[TaggedSentence]) -> MajorModel:
    """
    Fit the majority-tag baseline.

    The majority is taken over token counts; ties go to the lexicographically
    smallest tag.

    Raises
    ------
    ValueError
        If ``train`` is empty.
    """
    model = MajorModel(_most_common(_tag_counts(train)))
    logger.info(f"Fitted MAJOR baseline: {model.majority_tag}")
    return model


@beartype
def fit_memo(train: list[TaggedSentence]) -> MemoModel:
    """
    Fit the word-tag memorization baseline.

    Each lowercased training word maps to its most frequent tag, with the same
    tie rule as :func:`fit_major`.

    Raises
    ------
    ValueError
        If ``train`` is empty.
    """
    fallback = _most_common(_tag_counts(train))

    per_word: defaultdict[str, Counter[str]] = defaultdict(Counter)
    for sentence in train:
        for token, tag in zip(sentence.tokens, sentence.tags):
            per_word[normalize(token)][tag] += 1

    word_tags = {word: _most_common(counts) for word, counts in per_word.items()}
    logger.info(f"Fitted MEMO baseline: {len(word_tags)} words, fallback {fallback}")
    return MemoModel(word_tags, fallback)


def predict_baseline(model: BaselineModel, sentence: TaggedSentence) -> list[str]:
    """Tag a sentence with a fitted baseline."""
    match model:
        case MajorModel(majority_tag=tag):
            return [tag] * len(sentence)
        case MemoModel():
            return [model.word_tags.get(normalize(tok), model.fallback) for tok in sentence.tokens]
        case _:
            raise ValueError(f"Not a baseline model: {type(model).__name__}")


def baseline_from_text(text: str) -> BaselineModel:
    """
    Parse the plain-text model file written by ``to_text``.

    Raises
    ------
    ValueError
        On an unknown header or malformed ``word<TAB>tag`` line.
    """
    lines = [line for line in text.split("\n") if line]
    if not lines:
        raise ValueError("Empty baseline model file.")

    header = lines[0].split(" ")
    match header:
        case ["MAJOR", tag]:
            return MajorModel(tag)
        case ["MEMO", fallback]:
            word_tags = {}
            for line in lines[1:]:
                fields = line.split("\t")
                if len(fields) != 2:
                    raise ValueError(f"Malformed MEMO entry: {line!r}")
                word_tags[fields[0]] = fields[1]
            return MemoModel(word_tags, fallback)
        case _:
            raise ValueError(f"Unknown baseline header: {lines[0]!r}")
