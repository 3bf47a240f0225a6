from .app import App, main
from .run_config import RunConfig

__all__ = ["App", "RunConfig", "main"]
