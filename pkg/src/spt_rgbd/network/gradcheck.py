"""Central finite differences, used as an independent oracle for autograd gradients."""

from __future__ import annotations

from typing import Callable, Iterable

import torch


@torch.no_grad()
def numerical_grad(fn: Callable[[], torch.Tensor], tensor: torch.Tensor, eps: float = 1e-6) -> torch.Tensor:
    """d fn() / d tensor by central differences, perturbing ``tensor`` in place entry by entry."""
    grad = torch.zeros_like(tensor)
    flat = tensor.view(-1)
    g = grad.view(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + eps
        f_plus = float(fn())
        flat[i] = orig - eps
        f_minus = float(fn())
        flat[i] = orig
        g[i] = (f_plus - f_minus) / (2 * eps)
    return grad


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor, floor: float = 1e-12) -> float:
    """``||a - n|| / max(||a||, ||n||, floor)``."""
    num = (analytic - numeric).norm().item()
    den = max(analytic.norm().item(), numeric.norm().item(), floor)
    return num / den


def check_gradients(
    fn: Callable[[], torch.Tensor], tensors: Iterable[torch.Tensor], eps: float = 1e-6, floor: float = 1e-12
) -> dict[int, float]:
    """Relative error of autograd vs finite differences for each tensor (must require grad)."""
    tensors = list(tensors)
    for t in tensors:
        t.grad = None
    fn().backward()
    errors = {}
    for i, t in enumerate(tensors):
        analytic = t.grad.detach().clone() if t.grad is not None else torch.zeros_like(t)
        errors[i] = relative_error(analytic, numerical_grad(fn, t.data, eps), floor)
    return errors


class VacuousCheck(ValueError):
    """The objective is flat at the test point, so there is no gradient to compare."""


def module_gradient_error(
    fn: Callable[[], torch.Tensor], tensors: Iterable[torch.Tensor], eps: float = 1e-6,
    min_norm: float = 1e-8,
) -> float:
    """Relative error over all gradients of ``tensors`` concatenated into one vector.

    Per-tensor errors are meaningless for gradients that are exactly zero, such as
    the key-projection bias (it shifts every attention score equally, which the
    softmax ignores): both sides are then rounding noise. For the same reason a
    point where every gradient vanishes (e.g. a corner head whose last ReLU is dead)
    raises ``VacuousCheck`` instead of returning noise over noise.
    """
    tensors = list(tensors)
    for t in tensors:
        t.grad = None
    fn().backward()
    analytic = torch.cat([
        (t.grad if t.grad is not None else torch.zeros_like(t)).detach().reshape(-1) for t in tensors
    ])
    numeric = torch.cat([numerical_grad(fn, t.data, eps).reshape(-1) for t in tensors])
    scale = max(analytic.norm().item(), numeric.norm().item())
    if scale < min_norm:
        raise VacuousCheck(f"gradient norm {scale:.1e} below {min_norm:.0e}")
    return relative_error(analytic, numeric)
