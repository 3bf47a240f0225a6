from dataclasses import dataclass
from pathlib import Path
import random
from typing import Sequence, TypeVar, Union

from beartype import beartype

from taglab.config import logger
from taglab.errors import CorpusFormatError

T = TypeVar("T")

SPLIT_NAMES = ("train", "dev", "test")


@dataclass(frozen=True)
class FoldSplit:
    """
    Sentence indices of one cross-validation fold.

    The test set is fold ``fold_id`` and the development set is the next fold
    (cyclically); the remaining folds are for training.
    """

    fold_id: int
    train_ids: tuple[int, ...]
    dev_ids: tuple[int, ...]
    test_ids: tuple[int, ...]

    def ids(self, split: str) -> tuple[int, ...]:
        match split:
            case "train":
                return self.train_ids
            case "dev":
                return self.dev_ids
            case "test":
                return self.test_ids
            case _:
                raise ValueError(f"Unknown split: {split}")

    def select(self, items: Sequence[T], split: str) -> list[T]:
        return [items[i] for i in self.ids(split)]


@beartype
def make_folds(n_sentences: int, k: int = 5, seed: int = 0) -> list[FoldSplit]:
    """
    Deterministic k-fold cross-validation splits.

    Sentence indices are shuffled with ``seed`` and sliced into ``k`` contiguous
    folds whose sizes differ by at most one (earlier folds take the remainder).
    Fold ``i`` is the test set of split ``i`` and fold ``(i + 1) % k`` its
    development set.

    Parameters
    ----------
    n_sentences : int
        Corpus size.
    k : int, optional
        Number of folds, at least 2.
    seed : int, optional
        Shuffle seed; recorded in every report.

    Returns
    -------
    list of FoldSplit
        One split per fold, ordered by ``fold_id``.

    Raises
    ------
    ValueError
        If ``k < 2`` or ``n_sentences < k``.

    Examples
    --------
    >>> [len(f.test_ids) for f in make_folds(11, k=5, seed=0)]
    [3, 2, 2, 2, 2]
    """
    _validate_fold_count(n_sentences, k)

    ids = list(range(n_sentences))
    random.Random(seed).shuffle(ids)
    logger.info(f"Splitting {n_sentences} sentences into {k} folds (seed={seed})")

    return _assemble_splits(_compute_folds(ids, k))


# ----------------------------- Split files -------------------------------- #


def write_split_file(path: Union[str, Path], folds: list[FoldSplit]) -> Path:
    """
    Write folds as ``<fold_id><TAB><train|dev|test><TAB><sentence_index>`` lines.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{fold.fold_id}\t{split}\t{idx}"
        for fold in folds
        for split in SPLIT_NAMES
        for idx in fold.ids(split)
    ]
    path.write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
    logger.debug(f"Wrote {len(folds)} folds to {path}")
    return path


def load_split_file(path: Union[str, Path], n_sentences: int | None = None) -> list[FoldSplit]:
    """
    Load a pre-made split file, such as the one released with a corpus.

    Parameters
    ----------
    path : str or Path
        Split file in the format written by :func:`write_split_file`.
    n_sentences : int, optional
        When given, every fold must cover exactly ``range(n_sentences)``.

    Raises
    ------
    CorpusFormatError
        On malformed lines or folds that are not a partition of the corpus.
    """
    path = Path(path)
    members: dict[int, dict[str, list[int]]] = {}

    for line_number, line in enumerate(path.read_text(encoding="utf-8").split("\n"), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 3 or fields[1] not in SPLIT_NAMES:
            raise CorpusFormatError(f"malformed split line: {line!r}", line_number)
        try:
            fold_id, idx = int(fields[0]), int(fields[2])
        except ValueError as e:
            raise CorpusFormatError(f"non-integer field: {line!r}", line_number) from e
        members.setdefault(fold_id, {s: [] for s in SPLIT_NAMES})[fields[1]].append(idx)

    folds = [
        FoldSplit(
            fold_id,
            tuple(members[fold_id]["train"]),
            tuple(members[fold_id]["dev"]),
            tuple(members[fold_id]["test"]),
        )
        for fold_id in sorted(members)
    ]

    for fold in folds:
        _validate_partition(fold, n_sentences)

    logger.info(f"Loaded {len(folds)} folds from {path}")
    return folds


# ----------------------------- Helpers -------------------------------- #


def _validate_fold_count(n_sentences: int, k: int) -> None:
    """
    Raises
    ------
    ValueError
        If fewer than two folds are requested or there are fewer sentences than folds.
    """
    if k < 2:
        raise ValueError(f"Need at least 2 folds, but got k={k}")

    if n_sentences < k:
        raise ValueError(f"Cannot split {n_sentences} sentences into {k} folds")


def _compute_folds(ids: list[int], k: int) -> list[list[int]]:
    base, remainder = divmod(len(ids), k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < remainder else 0)
        folds.append(ids[start : start + size])
        start += size
    return folds


def _assemble_splits(folds: list[list[int]]) -> list[FoldSplit]:
    k = len(folds)
    splits = []
    for i in range(k):
        dev = (i + 1) % k
        train = [idx for j, fold in enumerate(folds) if j not in (i, dev) for idx in fold]
        splits.append(FoldSplit(i, tuple(train), tuple(folds[dev]), tuple(folds[i])))
    return splits


def _validate_partition(fold: FoldSplit, n_sentences: int | None) -> None:
    train, dev, test = set(fold.train_ids), set(fold.dev_ids), set(fold.test_ids)
    total = len(fold.train_ids) + len(fold.dev_ids) + len(fold.test_ids)

    if len(train | dev | test) != total:
        raise CorpusFormatError(f"fold {fold.fold_id}: train/dev/test overlap")

    if n_sentences is not None and (train | dev | test) != set(range(n_sentences)):
        raise CorpusFormatError(
            f"fold {fold.fold_id}: does not cover exactly {n_sentences} sentences"
        )
