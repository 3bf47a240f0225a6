from functools import cached_property
from typing import Sequence

from beartype import beartype
from torch.utils.data import Dataset

from .corpus import TaggedSentence
from .vocabulary import EncodedSentence, FeatureFlags, Vocabulary, encode_sentence


class TaggedCorpusDataset(Dataset):
    """
    Sentences of a corpus, encoded against a fixed vocabulary.

    Encoding is done once, on first access, and cached.

    Parameters
    ----------
    sentences : sequence of TaggedSentence
        Labeled or unlabeled sentences.
    vocab : Vocabulary
        Vocabulary built from the training split.
    flags : FeatureFlags, optional
        Feature selection; only the casing policy affects encoding.

    Attributes
    ----------
    sentences : list of TaggedSentence
    vocab : Vocabulary
    flags : FeatureFlags
    data : list of EncodedSentence
        Cached encoded sentences, in the order of ``sentences``.
    """

    @beartype
    def __init__(
        self,
        sentences: Sequence[TaggedSentence],
        vocab: Vocabulary,
        flags: FeatureFlags = FeatureFlags(),
    ):
        self.sentences = list(sentences)
        self.vocab = vocab
        self.flags = flags

    @cached_property
    def data(self) -> list[EncodedSentence]:
        return [encode_sentence(self.vocab, s, self.flags) for s in self.sentences]

    def __len__(self) -> int:
        return len(self.sentences)

    def __getitem__(self, idx: int) -> EncodedSentence:
        return self.data[idx]


def collate_sentences(batch: list[EncodedSentence]) -> list[EncodedSentence]:
    """Keep a batch as a list; sentences are scored one at a time."""
    return batch
