import random

from faker import Faker
import pytest

from taglab.data.corpus import TaggedSentence

# Two-letter suffix of every synthetic word and the tag it determines.
SUFFIX_TAGS = {
    "an": "NN",
    "ku": "VB",
    "ny": "JJ",
    "ah": "RB",
    "el": "PR",
    "is": "CC",
    "or": "IN",
    "um": "DT",
}


def make_lexicon(
    n_words: int = 200, seed: int = 0, exclude: frozenset[str] = frozenset()
) -> dict[str, str]:
    """Distinct words of a one to four letter stem plus a suffix, mapped to their tag."""
    fake = Faker()
    fake.seed_instance(seed)
    suffixes = list(SUFFIX_TAGS)

    lexicon = {}
    while len(lexicon) < n_words:
        stem = fake.lexify("?" * fake.random_int(1, 4), letters="bcdfgkmprst")
        suffix = suffixes[len(lexicon) % len(suffixes)]
        if stem + suffix not in exclude:
            lexicon.setdefault(stem + suffix, SUFFIX_TAGS[suffix])
    return lexicon


def make_corpus(
    n_sentences: int = 500,
    n_words: int = 200,
    seed: int = 0,
    max_len: int = 8,
    exclude: frozenset[str] = frozenset(),
) -> list[TaggedSentence]:
    lexicon = make_lexicon(n_words, seed, exclude)
    words = sorted(lexicon)
    rng = random.Random(seed)

    sentences = []
    for _ in range(n_sentences):
        tokens = rng.choices(words, k=rng.randint(2, max_len))
        sentences.append(TaggedSentence(tuple(tokens), tuple(lexicon[t] for t in tokens)))
    return sentences


@pytest.fixture(scope="session")
def synthetic_corpus() -> list[TaggedSentence]:
    return make_corpus()


@pytest.fixture(scope="session")
def small_corpus() -> list[TaggedSentence]:
    return make_corpus(n_sentences=40, n_words=40, seed=1, max_len=6)


@pytest.fixture(scope="session")
def tiny_corpus() -> list[TaggedSentence]:
    return make_corpus(n_sentences=10, n_words=30, seed=2, max_len=6)


@pytest.fixture
def corpus_text() -> str:
    return "Saya\tPRP\nmakan\tVB\nnasi\tNN\n\nDia\tPRP\npergi_ke\tVB\n"
