"""Helpers shared by the command classes."""

from pathlib import Path
from typing import Any, Optional, Sequence

from taglab.architectures.baselines import fit_major, fit_memo, predict_baseline
from taglab.architectures.crf import CrfTagger, predict_crf, train_crf
from taglab.architectures.neural import NeuralTagger, train_neural
from taglab.config import Directories
from taglab.data.corpus import TaggedSentence, read_corpus
from taglab.data.storage import Model, Storage
from taglab.data.utils.splitter import FoldSplit, load_split_file, make_folds
from taglab.data.vocabulary import encode_sentence
from taglab.errors import UsageError
from taglab.evaluation import ConfusionMatrix, TagReport, confusion, tag_report
from taglab.modeling.train import EpochRecord

from .run_config import RunConfig


def require(config: RunConfig, *names: str) -> None:
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(config, name) is None]
    if missing:
        raise UsageError(f"{config.command} needs {', '.join(missing)}")


def read_sentences(path: str, labeled: bool = True) -> list[TaggedSentence]:
    return read_corpus(Storage.validate_file(Path(path)), labeled=labeled)


def output_path(config: RunConfig, default: Path) -> Path:
    return Path(config.out) if config.out is not None else default


def load_folds(config: RunConfig, n_sentences: int) -> list[FoldSplit]:
    """Folds of the split file if one was given, otherwise fresh seeded folds."""
    if config.split is not None:
        return load_split_file(Storage.validate_file(Path(config.split)), n_sentences)
    return make_folds(n_sentences, config.k, config.seed)


def select_fold(folds: Sequence[FoldSplit], fold_id: int) -> FoldSplit:
    for fold in folds:
        if fold.fold_id == fold_id:
            return fold
    raise UsageError(f"No fold {fold_id}; available: {[f.fold_id for f in folds]}")


def fit(
    config: RunConfig,
    train: Sequence[TaggedSentence],
    dev: Sequence[TaggedSentence],
    progress: bool = True,
) -> tuple[Model, list[EpochRecord]]:
    """Train the model kind of ``config``; baselines have an empty history."""
    match config.model_kind:
        case "major":
            return fit_major(list(train)), []
        case "memo":
            return fit_memo(list(train)), []
        case "crf":
            return train_crf(config.crf_config(), train, dev, progress=progress)
        case "neural":
            return train_neural(
                config.neural_config(),
                config.train_config(),
                train,
                dev,
                word_min=config.word_min,
                affix_min=config.affix_min,
                progress=progress,
            )


def tag_sentences(model: Model, sentences: Sequence[TaggedSentence]) -> list[list[str]]:
    """Predicted tags of every sentence; gold tags, if any, are ignored."""
    unlabeled = [TaggedSentence(s.tokens) for s in sentences]
    match model:
        case CrfTagger():
            return [predict_crf(model, s) for s in unlabeled]
        case NeuralTagger():
            flags = model.config.flags
            return model.tag([encode_sentence(model.vocab, s, flags) for s in unlabeled])
        case _:
            return [predict_baseline(model, s) for s in unlabeled]


def score(
    model: Model, sentences: Sequence[TaggedSentence], tags: Optional[list[str]] = None
) -> tuple[ConfusionMatrix, TagReport]:
    predictions = tag_sentences(model, sentences)
    cm = confusion([s.tags for s in sentences], predictions, tags)
    return cm, tag_report(cm)


def report_header(config: RunConfig) -> dict[str, Any]:
    """Resolved configuration and seed, embedded in every report."""
    return {"config": config.to_dict(), "seed": config.seed}


def default_model_path(config: RunConfig) -> Path:
    return Directories.MODELS_DIR.value / f"{config.model_kind}-fold{config.fold}.taglab"
