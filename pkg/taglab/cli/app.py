import argparse
import sys
from typing import Optional, Sequence

from taglab import __version__
from taglab.config import logger
from taglab.errors import StorageError, TaglabError, UsageError

from .ablate_command import AblateCommand
from .base_command import BaseCommand
from .crossval_command import CrossvalCommand
from .eval_command import EvalCommand
from .run_config import MODEL_KINDS, RunConfig
from .split_command import SplitCommand
from .tag_command import TagCommand
from .train_command import TrainCommand
from .tune_command import TuneCommand


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand; unset flags stay ``None``."""
    data = parser.add_argument_group("data")
    data.add_argument("--config", help="TOML file of settings; flags override it")
    data.add_argument("--corpus", help="Tagged corpus, one token<TAB>tag per line")
    data.add_argument("--split", help="Split file; fresh seeded folds when omitted")
    data.add_argument("--fold", type=int, help="Fold id to train or evaluate (default 0)")
    data.add_argument("--k", type=int, help="Number of folds (default 5)")
    data.add_argument("--model", help="Saved model file")
    data.add_argument("--input", help="Untagged input, one token per line")
    data.add_argument("--out", help="Output file or directory")

    model = parser.add_argument_group("model")
    model.add_argument("--model-kind", choices=MODEL_KINDS, help="Default neural")
    model.add_argument("--encoder", help="ff or bilstm; comma-separated for tune")
    model.add_argument("--predictor", help="softmax or crf; comma-separated for tune")
    model.add_argument("--features", help="Comma-separated from words,prefix,suffix,chars")
    model.add_argument("--window", help="Context tokens on each side")
    model.add_argument("--l2", help="CRF L2 coefficient")
    model.add_argument("--dropout", help="Dropout rate")
    model.add_argument("--filter-widths", help="Character CNN filter widths")
    model.add_argument("--lowercase-mode", choices=("lookups", "none-with-chars"))
    model.add_argument("--word-min", type=int, help="Minimum training count of a word")
    model.add_argument("--affix-min", type=int, help="Minimum training count of an affix")
    model.add_argument("--feature-cutoff", type=int, help="Minimum count of a CRF feature")

    training = parser.add_argument_group("training")
    training.add_argument("--lr", help="Initial learning rate")
    training.add_argument("--batch-size", type=int, help="Sentences per batch (default 8)")
    training.add_argument("--clip", type=float, help="Gradient norm limit (default 1.0)")
    training.add_argument("--epochs", type=int, help="Maximum number of epochs")
    training.add_argument("--seed", type=int, help="Random seed (default 0)")
    training.add_argument("--std", choices=("sample", "population"), help="Fold spread")


class App:
    """Entry point dispatching to one command per subparser."""

    name = "taglab"

    def __init__(self) -> None:
        self.commands: dict[str, BaseCommand] = {
            command.name: command
            for command in (
                SplitCommand([self.name]),
                TrainCommand([self.name]),
                TagCommand([self.name]),
                EvalCommand([self.name]),
                CrossvalCommand([self.name]),
                TuneCommand([self.name]),
                AblateCommand([self.name]),
            )
        }

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog=self.name, description="Train and evaluate part-of-speech taggers."
        )
        parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
        for name, command in self.commands.items():
            subparser = subparsers.add_parser(name, help=command.help, description=command.help)
            add_run_arguments(subparser)
            command.add_arguments(subparser)
        return parser

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """
        Run one command and return its exit status.

        0 on success, 2 for usage errors, 3 for I/O failures, 4 for malformed
        corpus or model files and 5 for numeric failures in training.
        """
        try:
            args = vars(self.build_parser().parse_args(argv))
        except SystemExit as e:
            return e.code if isinstance(e.code, int) else UsageError.exit_code

        command = self.commands[args.pop("command")]
        config_file = args.pop("config")
        try:
            config = RunConfig.resolve(command.name, args, config_file)
            command(config)
        except TaglabError as e:
            logger.error(f"{command.breadcrumbs}: {e}")
            return e.exit_code
        except ValueError as e:
            logger.error(f"{command.breadcrumbs}: {e}")
            return UsageError.exit_code
        except OSError as e:
            logger.error(f"{command.breadcrumbs}: {e}")
            return StorageError.exit_code
        return 0


def main() -> None:
    sys.exit(App().run())
