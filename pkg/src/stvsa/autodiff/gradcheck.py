from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor


def numeric_grad(f: Callable[[], Tensor], param: Tensor, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f()`` with respect to ``param``."""
    param.data = np.ascontiguousarray(param.data)
    out = np.zeros_like(param.data)
    flat = param.data.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = float(f().data)
        flat[i] = orig - h
        fm = float(f().data)
        flat[i] = orig
        out.reshape(-1)[i] = (fp - fm) / (2 * h)
    return out


def finite_diff_check(f: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5,
                      tol: float | None = None) -> float:
    """Largest ``|autodiff - numeric| / max(1, |numeric|)`` over all entries of ``params``.

    ``f`` must rebuild its graph on every call and read the params' ``.data``
    in place. When ``tol`` is given, an AssertionError is raised above it.
    """
    for p in params:
        p.grad = None
    loss = f()
    loss.backward()
    auto = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    for p, a in zip(params, auto):
        n = numeric_grad(f, p, h)
        if n.size:
            worst = max(worst, float(np.max(np.abs(a - n) / np.maximum(1.0, np.abs(n)))))
    if tol is not None and worst > tol:
        raise AssertionError(f"gradient check failed: {worst:.3e} > {tol:.1e}")
    return worst
