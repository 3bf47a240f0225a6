from .container import Model, ModelContainer, ModelStorage, load_model, save_model
from .storage import Storage

__all__ = ["Storage", "ModelStorage", "ModelContainer", "Model", "save_model", "load_model"]
