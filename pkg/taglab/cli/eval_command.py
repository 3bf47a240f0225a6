from taglab.config import Directories, logger
from taglab.data.storage import load_model
from taglab.evaluation import micro_f1, top_confusions, write_confusion_csv, write_report

from .base_command import BaseCommand
from .common import (
    load_folds,
    output_path,
    read_sentences,
    report_header,
    require,
    score,
    select_fold,
)
from .run_config import RunConfig


class EvalCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "model", "corpus")
        model = load_model(config.model)
        sentences = read_sentences(config.corpus)

        # With a split file only the test part of the chosen fold is scored.
        if config.split is not None:
            fold = select_fold(load_folds(config, len(sentences)), config.fold)
            sentences = fold.select(sentences, "test")
        if not sentences:
            logger.warning("Nothing to evaluate.")
            return

        cm, report = score(model, sentences)
        confusions = top_confusions(cm, n=10)

        out_dir = output_path(config, Directories.REPORTS_DIR.value / "eval")
        write_report(
            report_header(config)
            | {
                "report": report.to_dict(),
                "micro_f1": micro_f1(cm),
                "tokens": cm.total,
                "top_confusions": [list(cell) for cell in confusions],
            },
            out_dir / "report.json",
        )
        write_confusion_csv(cm, out_dir / "confusion.csv")

        print(f"weighted F1 {100 * report.weighted_f1:.2f}  accuracy {100 * report.accuracy:.2f}")
        for gold, predicted, count in confusions:
            print(f"{gold}\t{predicted}\t{count}")

        logger.success(f"Evaluation of {cm.total} tokens written to {out_dir}")

    @property
    def name(self) -> str:
        return "eval"

    @property
    def help(self) -> str:
        return "Score a saved model against gold tags; write the report and confusion matrix"
