from .train import TrainConfig, TrainState, clip_gradients, schedule_step, train_loop

__all__ = ["TrainConfig", "TrainState", "clip_gradients", "schedule_step", "train_loop"]
