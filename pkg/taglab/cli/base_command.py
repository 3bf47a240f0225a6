from abc import ABC, abstractmethod
import argparse
from typing import Sequence

from taglab.config import logger

from .run_config import RunConfig


class BaseCommand(ABC):
    def __init__(self, parent_breadcrumbs: Sequence[str] = ()) -> None:
        self.breadcrumb_path: list[str] = list(parent_breadcrumbs) + [self.name]

    @property
    @abstractmethod
    def name(self) -> str:
        """Override this property to set the subcommand name."""
        pass

    @property
    @abstractmethod
    def help(self) -> str:
        pass

    @property
    def breadcrumbs(self) -> str:
        return " > ".join(self.breadcrumb_path)

    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Override this method to add subcommand-specific flags."""
        pass

    @abstractmethod
    def run(self, config: RunConfig) -> None:
        """Override this method to implement the subcommand."""
        pass

    def __call__(self, config: RunConfig) -> None:
        logger.info(f"{self.breadcrumbs} (model kind {config.model_kind}, seed {config.seed})")
        self.run(config)
