from functools import partial
from typing import Any, Sequence

import polars as pl

from taglab.config import Directories, Environments, logger
from taglab.data.corpus import TaggedSentence
from taglab.data.utils import FoldSplit
from taglab.evaluation import aggregate_folds, format_mean_std, write_report
from taglab.modeling.tune import parallel_map

from .base_command import BaseCommand
from .common import fit, load_folds, output_path, read_sentences, report_header, require, score
from .run_config import RunConfig


def run_fold(
    config: RunConfig, sentences: Sequence[TaggedSentence], fold: FoldSplit
) -> dict[str, Any]:
    """Train on a fold's train part, select on dev, and score dev and test."""
    train, dev, test = (fold.select(sentences, split) for split in ("train", "dev", "test"))
    model, history = fit(config.with_fold(fold.fold_id), train, dev, progress=False)

    _, dev_report = score(model, dev)
    _, test_report = score(model, test)
    logger.info(
        f"Fold {fold.fold_id}: dev F1 {dev_report.weighted_f1:.4f}, "
        f"test F1 {test_report.weighted_f1:.4f}"
    )
    return {
        "fold": fold.fold_id,
        "epochs": len(history),
        "dev_f1": dev_report.weighted_f1,
        "test_f1": test_report.weighted_f1,
        "test_accuracy": test_report.accuracy,
    }


class CrossvalCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "corpus")
        sentences = read_sentences(config.corpus)
        folds = load_folds(config, len(sentences))

        runner = partial(run_fold, config, sentences)
        threads = min(Environments.TAGLAB_THREADS.value, len(folds))
        rows = parallel_map(runner, folds, threads, desc="Folds")

        summary = {}
        for column in ("dev_f1", "test_f1"):
            mean, std = aggregate_folds([row[column] for row in rows], std=config.std)
            summary[column] = {"mean": mean, "std": std, "formatted": format_mean_std(mean, std)}

        out_dir = output_path(config, Directories.REPORTS_DIR.value / "crossval")
        out_dir.mkdir(parents=True, exist_ok=True)
        pl.DataFrame(rows).write_csv(out_dir / "folds.csv")
        write_report(
            report_header(config) | {"folds": rows, "aggregate": summary},
            out_dir / "report.json",
        )

        print("model\tdev\ttest")
        dev, test = summary["dev_f1"]["formatted"], summary["test_f1"]["formatted"]
        print(f"{config.model_kind}\t{dev}\t{test}")
        logger.success(f"Cross-validated {len(folds)} folds; report written to {out_dir}")

    @property
    def name(self) -> str:
        return "crossval"

    @property
    def help(self) -> str:
        return "Train and test on every fold and report mean (std) weighted F1"
