import pytest

from taglab.data.utils import splitter
from taglab.data.utils.splitter import load_split_file, make_folds, write_split_file
from taglab.errors import CorpusFormatError


def test_compute_folds_sizes():
    folds = splitter._compute_folds(list(range(11)), 5)

    # earlier folds take the remainder
    assert [len(f) for f in folds] == [3, 2, 2, 2, 2]
    assert sum(folds, []) == list(range(11))


def test_assemble_splits_uses_next_fold_as_dev():
    folds = [[0], [1], [2], [3]]
    splits = splitter._assemble_splits(folds)

    assert splits[0].test_ids == (0,)
    assert splits[0].dev_ids == (1,)
    assert splits[0].train_ids == (2, 3)
    assert splits[3].dev_ids == (0,)


@pytest.mark.parametrize("n, k", [(10, 5), (11, 5), (500, 5), (7, 3)])
def test_every_fold_is_a_partition(n, k):
    for fold in make_folds(n, k, seed=3):
        ids = fold.train_ids + fold.dev_ids + fold.test_ids
        assert sorted(ids) == list(range(n))


def test_test_sets_cover_corpus_once():
    folds = make_folds(23, 5, seed=0)
    test_ids = [i for fold in folds for i in fold.test_ids]

    assert sorted(test_ids) == list(range(23))


def test_same_seed_same_folds():
    assert make_folds(50, 5, seed=7) == make_folds(50, 5, seed=7)
    assert make_folds(50, 5, seed=7) != make_folds(50, 5, seed=8)


@pytest.mark.parametrize("n, k", [(3, 5), (10, 1)])
def test_invalid_fold_count(n, k):
    with pytest.raises(ValueError):
        make_folds(n, k)


def test_select():
    fold = make_folds(5, 5, seed=0)[0]
    items = ["a", "b", "c", "d", "e"]

    assert fold.select(items, "test") == [items[i] for i in fold.test_ids]
    with pytest.raises(ValueError):
        fold.select(items, "validation")


def test_split_file_round_trip(tmp_path):
    folds = make_folds(17, 5, seed=1)
    path = write_split_file(tmp_path / "folds.tsv", folds)

    assert load_split_file(path, n_sentences=17) == folds


def test_split_file_rejects_overlap(tmp_path):
    path = tmp_path / "folds.tsv"
    path.write_text("0\ttrain\t0\n0\ttest\t0\n0\tdev\t1\n")

    with pytest.raises(CorpusFormatError):
        load_split_file(path)


def test_split_file_rejects_incomplete_cover(tmp_path):
    path = tmp_path / "folds.tsv"
    path.write_text("0\ttrain\t0\n0\tdev\t1\n0\ttest\t2\n")

    with pytest.raises(CorpusFormatError):
        load_split_file(path, n_sentences=4)


def test_split_file_malformed_line(tmp_path):
    path = tmp_path / "folds.tsv"
    path.write_text("0\ttrain\t0\n0\tholdout\t1\n")

    with pytest.raises(CorpusFormatError, match="line 2"):
        load_split_file(path)
