from taglab.config import Directories, logger
from taglab.errors import UsageError
from taglab.evaluation import write_report
from taglab.modeling.tune import ablation

from .base_command import BaseCommand
from .common import load_folds, output_path, read_sentences, report_header, require, select_fold
from .run_config import RunConfig


class AblateCommand(BaseCommand):
    def run(self, config: RunConfig) -> None:
        require(config, "corpus")
        if config.model_kind != "neural":
            raise UsageError("Feature ablation needs --model-kind neural")

        sentences = read_sentences(config.corpus)
        fold = select_fold(load_folds(config, len(sentences)), config.fold)
        train, dev = fold.select(sentences, "train"), fold.select(sentences, "dev")

        table = ablation(
            train,
            dev,
            config.neural_config(),
            config.train_config(),
            word_min=config.word_min,
            affix_min=config.affix_min,
        )

        out_dir = output_path(config, Directories.REPORTS_DIR.value / "ablation")
        out_dir.mkdir(parents=True, exist_ok=True)
        table.write_csv(out_dir / "ablation.csv")
        write_report(report_header(config) | {"rows": table.to_dicts()}, out_dir / "report.json")

        for row in table.iter_rows(named=True):
            delta = f" ({row['delta']})" if row["delta"] else ""
            print(f"{row['step']}\t{row['f1']}{delta}")
        logger.success(f"Ablation table written to {out_dir}")

    @property
    def name(self) -> str:
        return "ablate"

    @property
    def help(self) -> str:
        return "Add characters, prefixes and suffixes to a words-only tagger in turn"
