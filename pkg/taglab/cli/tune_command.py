from functools import partial

from taglab.architectures.crf import CrfConfig
from taglab.architectures.neural import NeuralConfig
from taglab.config import Directories, logger
from taglab.errors import UsageError
from taglab.evaluation import write_report
from taglab.modeling.train import TrainConfig
from taglab.modeling.tune import (
    Space,
    best_per_architecture,
    grid_search,
    run_crf_cell,
    run_neural_cell,
)

from .base_command import BaseCommand
from .common import load_folds, output_path, read_sentences, report_header, require, select_fold
from .run_config import RunConfig


def _parse(config: RunConfig, name: str, cast: type) -> list:
    try:
        return [cast(value) for value in config.grid(name)]
    except ValueError as e:
        raise UsageError(f"Bad --{name.replace('_', '-')} grid: {e}") from e


def crf_space(config: RunConfig) -> Space:
    return {
        "window": _parse(config, "window", int),
        "l2": _parse(config, "l2", float),
        "lr": _parse(config, "lr", float),
    }


def neural_space(config: RunConfig) -> Space:
    # Each --filter-widths candidate is one CNN width.
    return {
        "encoder": config.grid("encoder"),
        "predictor": config.grid("predictor"),
        "window": _parse(config, "window", int),
        "dropout": _parse(config, "dropout", float),
        "lr": _parse(config, "lr", float),
        "filter_widths": [(w,) for w in _parse(config, "filter_widths", int)],
    }


class TuneCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "corpus")
        sentences = read_sentences(config.corpus)
        fold = select_fold(load_folds(config, len(sentences)), config.fold)
        train, dev = fold.select(sentences, "train"), fold.select(sentences, "dev")

        match config.model_kind:
            case "crf":
                space = crf_space(config)
                base = CrfConfig(
                    max_epochs=int(config.epochs),
                    seed=config.seed,
                    feature_cutoff=config.feature_cutoff,
                    batch_size=config.batch_size,
                    clip_norm=config.clip,
                )
                runner = partial(run_crf_cell, train=train, dev=dev, base=base)
            case "neural":
                space = neural_space(config)
                base = NeuralConfig(
                    lowercase_mode=config.lowercase_mode, seed=config.seed
                ).with_features(config.features)
                trainer = TrainConfig(
                    batch_size=config.batch_size,
                    clip_norm=config.clip,
                    seed=config.seed,
                    max_epochs=int(config.epochs),
                )
                runner = partial(
                    run_neural_cell,
                    train=train,
                    dev=dev,
                    base=base,
                    train_config=trainer,
                    word_min=config.word_min,
                    affix_min=config.affix_min,
                )
            case _:
                raise UsageError(f"Nothing to tune for --model-kind {config.model_kind}")

        try:
            result = grid_search(space, runner)
        except ValueError as e:
            raise UsageError(str(e)) from e

        out_dir = output_path(config, Directories.REPORTS_DIR.value / "tune")
        out_dir.mkdir(parents=True, exist_ok=True)
        result.leaderboard.write_csv(out_dir / "leaderboard.csv")

        report = report_header(config) | {
            "best": {k: list(v) if isinstance(v, tuple) else v for k, v in result.best.items()},
            "best_dev_f1": result.best_f1,
            "leaderboard": result.leaderboard.to_dicts(),
        }
        if config.model_kind == "neural":
            table = best_per_architecture(result.leaderboard)
            table.write_csv(out_dir / "architectures.csv")
            report["architectures"] = table.to_dicts()
            print(table)
        write_report(report, out_dir / "report.json")

        print(f"best {result.best} dev F1 {100 * result.best_f1:.2f}")
        logger.success(f"Leaderboard of {result.leaderboard.height} cells written to {out_dir}")

    @property
    def name(self) -> str:
        return "tune"

    @property
    def help(self) -> str:
        return "Grid-search comma-separated hyperparameter values on a fold's dev part"
