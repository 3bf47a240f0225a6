"""
Grid search over training hyperparameters and the feature ablation sweep.

A search space maps parameter names to candidate values; cells are enumerated
as the cartesian product in the order the names were given. Every cell is an
independent, seeded training run, so cells may be spread across processes
(capped by ``TAGLAB_THREADS``) without changing any result.
"""

from dataclasses import dataclass, fields, replace
from functools import partial
import itertools
import multiprocessing
from typing import Any, Callable, Optional, Sequence

import polars as pl
from tqdm import tqdm

from taglab.architectures.crf import CrfConfig, train_crf
from taglab.architectures.neural import NeuralConfig, train_neural
from taglab.config import Environments, logger
from taglab.data.corpus import TaggedSentence

from .train import EpochRecord, TrainConfig

type Space = dict[str, Sequence[Any]]
type CellRunner = Callable[[dict[str, Any]], float]

ABLATION_STEPS: tuple[tuple[str, str], ...] = (
    ("words", "words"),
    ("+chars", "words,chars"),
    ("+prefix", "words,chars,prefix"),
    ("+suffix", "words,chars,prefix,suffix"),
)


@dataclass(frozen=True)
class GridResult:
    best: dict[str, Any]
    best_f1: float
    leaderboard: pl.DataFrame


def enumerate_space(space: Space) -> list[dict[str, Any]]:
    """
    Cells of ``space`` in deterministic enumeration order.

    Raises
    ------
    ValueError
        If the space has no parameters or a parameter has no candidates.
    """
    if not space:
        raise ValueError("Search space is empty.")
    empty = [name for name, values in space.items() if len(values) == 0]
    if empty:
        raise ValueError(f"Search space has no candidates for {empty}")

    names = list(space)
    return [dict(zip(names, values)) for values in itertools.product(*space.values())]


def parallel_map(
    fn: Callable[[Any], Any],
    items: Sequence[Any],
    threads: int = 1,
    desc: Optional[str] = None,
    progress: bool = True,
) -> list[Any]:
    """
    Apply ``fn`` to every item, in up to ``threads`` worker processes.

    Results keep the order of ``items`` whatever the number of workers.
    """
    results = []
    with tqdm(total=len(items), desc=desc, disable=not progress) as bar:
        if threads > 1:
            with multiprocessing.get_context("spawn").Pool(processes=threads) as pool:
                for result in pool.imap(fn, items):
                    results.append(result)
                    bar.update()
        else:
            for item in items:
                results.append(fn(item))
                bar.update()
    return results


def best_dev_f1(history: Sequence[EpochRecord]) -> float:
    return max((record.dev_f1 for record in history), default=0.0)


def run_crf_cell(
    params: dict[str, Any],
    train: Sequence[TaggedSentence],
    dev: Sequence[TaggedSentence],
    base: CrfConfig,
) -> float:
    """Dev weighted F1 of a CRF trained with ``params`` over ``base``."""
    _, history = train_crf(replace(base, **params), train, dev, progress=False)
    return best_dev_f1(history)


def split_neural_params(
    params: dict[str, Any], base: NeuralConfig, train_config: TrainConfig
) -> tuple[NeuralConfig, TrainConfig]:
    """
    Route grid parameters to the model or the trainer configuration.

    ``lr`` sets the trainer's initial rate, ``features`` a feature string such
    as ``"words,chars"``; any other name must be a :class:`NeuralConfig` or
    :class:`TrainConfig` field.
    """
    model_fields = {f.name for f in fields(NeuralConfig)}
    trainer_fields = {f.name for f in fields(TrainConfig)}

    model_updates, trainer_updates = {}, {}
    config = base
    for name, value in params.items():
        if name == "lr":
            trainer_updates["initial_lr"] = value
        elif name == "features":
            config = config.with_features(value)
        elif name in model_fields:
            model_updates[name] = value
        elif name in trainer_fields:
            trainer_updates[name] = value
        else:
            raise ValueError(f"Unknown tuning parameter {name!r}")

    return replace(config, **model_updates), replace(train_config, **trainer_updates)


def run_neural_cell(
    params: dict[str, Any],
    train: Sequence[TaggedSentence],
    dev: Sequence[TaggedSentence],
    base: NeuralConfig,
    train_config: TrainConfig,
    word_min: int = 2,
    affix_min: int = 5,
) -> float:
    """Dev weighted F1 of a neural tagger trained with ``params`` over ``base``."""
    config, trainer = split_neural_params(params, base, train_config)
    _, history = train_neural(
        config, trainer, train, dev, word_min=word_min, affix_min=affix_min, progress=False
    )
    return best_dev_f1(history)


def _leaderboard_value(value: Any) -> Any:
    if isinstance(value, (tuple, list)):
        return ",".join(str(v) for v in value)
    return value


def grid_search(
    space: Space,
    runner: CellRunner,
    threads: Optional[int] = None,
    progress: bool = True,
) -> GridResult:
    """
    Train every cell of ``space`` and rank the cells by dev weighted F1.

    Parameters
    ----------
    space : dict
        Parameter name to candidate values.
    runner : callable
        Trains one cell and returns its dev score. Must be picklable when
        ``threads > 1``; bind corpora and base configs with
        :func:`functools.partial` over :func:`run_crf_cell` or
        :func:`run_neural_cell`.
    threads : int, optional
        Worker processes. Defaults to ``TAGLAB_THREADS``.

    Returns
    -------
    GridResult
        The best cell, its score, and a leaderboard sorted by non-increasing
        dev F1. Equal scores keep enumeration order, so the earliest cell wins
        a tie.
    """
    cells = enumerate_space(space)
    threads = min(threads or Environments.TAGLAB_THREADS.value, len(cells))
    logger.info(f"Grid search over {len(cells)} cells with {threads} worker(s)")

    scores = parallel_map(runner, cells, threads, desc="Grid search", progress=progress)

    for i, (cell, score) in enumerate(zip(cells, scores)):
        logger.debug(f"Cell {i} {cell}: dev F1 {score:.4f}")

    rows = [
        {"cell": i, **{k: _leaderboard_value(v) for k, v in cell.items()}, "dev_f1": score}
        for i, (cell, score) in enumerate(zip(cells, scores))
    ]
    leaderboard = pl.DataFrame(rows).sort("dev_f1", descending=True, maintain_order=True)

    best_index = leaderboard["cell"][0]
    best, best_f1 = cells[best_index], scores[best_index]
    logger.success(f"Best cell {best_index} {best}: dev F1 {best_f1:.4f}")
    return GridResult(best, best_f1, leaderboard)


def best_per_architecture(leaderboard: pl.DataFrame) -> pl.DataFrame:
    """
    Highest-scoring row of each encoder and predictor pair.

    Raises
    ------
    ValueError
        If the leaderboard has no ``encoder`` or ``predictor`` column.
    """
    missing = {"encoder", "predictor"} - set(leaderboard.columns)
    if missing:
        raise ValueError(f"Leaderboard has no {sorted(missing)} column(s)")

    ranked = leaderboard.sort("dev_f1", descending=True, maintain_order=True)
    best = ranked.group_by("encoder", "predictor", maintain_order=True).first()
    return best.with_columns(
        pl.concat_str("encoder", "predictor", separator="-").alias("architecture")
    ).select("architecture", pl.exclude("architecture"))


def format_delta(delta: float) -> str:
    """Signed percentage-point change, e.g. ``"+1.36"``."""
    return f"{100 * delta:+.2f}"


def ablation(
    train: Sequence[TaggedSentence],
    dev: Sequence[TaggedSentence],
    base: NeuralConfig,
    train_config: TrainConfig,
    word_min: int = 2,
    affix_min: int = 5,
    runner: Optional[CellRunner] = None,
    progress: bool = True,
) -> pl.DataFrame:
    """
    Feature sweep: words, then characters, prefixes and suffixes added in turn.

    Returns
    -------
    polars.DataFrame
        One row per step with its feature set, dev F1 (percent, two decimals)
        and the change from the previous row; the first row has no delta.
    """
    runner = runner or partial(
        run_neural_cell,
        train=train,
        dev=dev,
        base=base,
        train_config=train_config,
        word_min=word_min,
        affix_min=affix_min,
    )

    rows, previous = [], None
    for step, features in tqdm(ABLATION_STEPS, desc="Ablation", disable=not progress):
        score = runner({"features": features})
        rows.append(
            {
                "step": step,
                "features": features,
                "dev_f1": score,
                "f1": f"{100 * score:.2f}",
                "delta": "" if previous is None else format_delta(score - previous),
            }
        )
        logger.info(f"Ablation {step}: dev F1 {score:.4f}")
        previous = score

    return pl.DataFrame(rows)
