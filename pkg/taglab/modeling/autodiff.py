from typing import Callable, Iterable, Optional

import torch
from torch import Tensor, nn

from taglab.config import logger


def backward(loss: Tensor, params: Iterable[nn.Parameter]) -> None:
    """
    Accumulate ``d loss / d param`` into every ``param.grad``.

    Parameters the loss does not reach get a zero gradient instead of ``None``.
    The graph is freed afterwards, so a second call on the same ``loss`` raises
    ``RuntimeError``.
    """
    loss.backward()
    for param in params:
        if param.requires_grad and param.grad is None:
            param.grad = torch.zeros_like(param)


def relative_error(analytic: Tensor, numeric: Tensor, floor: float = 1e-3) -> float:
    """Largest ``|a - n| / max(|a|, |n|, floor)`` over all coordinates."""
    denom = torch.maximum(analytic.abs(), numeric.abs()).clamp_min(floor)
    return float(((analytic - numeric).abs() / denom).max()) if analytic.numel() else 0.0


def finite_difference_check(
    params: dict[str, Tensor],
    loss_fn: Callable[[], float],
    analytic: dict[str, Tensor],
    eps: float = 1e-5,
) -> dict[str, float]:
    """
    Compare analytic gradients against central differences.

    Every coordinate of every tensor in ``params`` is perturbed in place by
    ``+eps`` and ``-eps`` and restored afterwards.

    Returns
    -------
    dict of str to float
        Maximum relative error per parameter name.
    """
    errors = {}
    with torch.no_grad():
        for name, param in params.items():
            numeric = torch.zeros_like(param)
            flat, flat_numeric = param.view(-1), numeric.view(-1)
            for i in range(flat.numel()):
                original = float(flat[i])
                flat[i] = original + eps
                plus = float(loss_fn())
                flat[i] = original - eps
                minus = float(loss_fn())
                flat[i] = original
                flat_numeric[i] = (plus - minus) / (2 * eps)
            errors[name] = relative_error(analytic[name].detach().to(param.dtype), numeric)
            logger.debug(f"Gradient check {name}: max relative error {errors[name]:.3e}")
    return errors


def grad_check(
    model_builder: Callable[[], tuple[nn.Module, Callable[[], Tensor]]],
    eps: float = 1e-5,
    dropout: bool = False,
    params: Optional[list[str]] = None,
) -> float:
    """
    Maximum relative error between autograd and central-difference gradients.

    Parameters
    ----------
    model_builder : callable
        Returns ``(model, loss_fn)`` where ``loss_fn()`` computes a scalar loss
        of ``model``. Use tiny double-precision models.
    eps : float, optional
        Perturbation size.
    dropout : bool, optional
        Leave the model in training mode. Dropout masks are then resampled on
        every evaluation and the check is expected to fail.
    params : list of str, optional
        Restrict the check to these parameter names.

    Returns
    -------
    float
        Maximum relative error over all checked coordinates.
    """
    model, loss_fn = model_builder()
    model.train(dropout)

    named = {
        name: p
        for name, p in model.named_parameters()
        if p.requires_grad and (params is None or name in params)
    }
    model.zero_grad(set_to_none=True)
    backward(loss_fn(), named.values())
    analytic = {name: p.grad.detach().clone() for name, p in named.items()}

    errors = finite_difference_check(
        {name: p.data for name, p in named.items()}, lambda: float(loss_fn()), analytic, eps
    )
    worst = max(errors.values(), default=0.0)
    logger.info(f"Gradient check over {len(errors)} tensors: max relative error {worst:.3e}")
    return worst
