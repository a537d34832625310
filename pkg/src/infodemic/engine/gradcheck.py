"""Central-difference verification of analytic gradients.

``grad_check`` takes a closure producing the scalar loss from the current
parameter values, runs one backward pass, then perturbs every parameter
component by +/-epsilon and compares.  It reports the maximum relative
error per parameter and never raises: negative results are data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor
from .tensor import Tensor, backward


@dataclass
class GradCheckReport:
    per_param: dict[str, float]
    tolerance: float

    @property
    def max_rel_error(self) -> float:
        return max(self.per_param.values()) if self.per_param else 0.0

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance

    def worst(self) -> str:
        if not self.per_param:
            return "(no parameters)"
        name = max(self.per_param, key=self.per_param.get)
        return f"{name}: {self.per_param[name]:.3e}"


def grad_check(loss_fn, params: list[Tensor], epsilon: float = 1e-6,
               tolerance: float = 1e-6, max_entries: int = 64,
               rng: np.random.Generator | None = None) -> GradCheckReport:
    """Compare backprop gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must be deterministic and depend on ``params`` only through
    their ``.data`` (float64 expected).  For large parameters a random
    subset of ``max_entries`` components is probed.
    """
    rng = rng or np.random.default_rng(0)
    for p in params:
        p.zero_grad()
    loss = loss_fn()
    backward(loss)
    analytic = [None if p.grad is None else p.grad.copy() for p in params]

    report: dict[str, float] = {}
    for i, p in enumerate(params):
        name = p.name or str(i)
        if name in report:
            name = f"{name}#{i}"
        grad = analytic[i]
        if grad is None:
            grad = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        n = flat.size
        probe = (np.arange(n) if n <= max_entries
                 else np.sort(rng.choice(n, size=max_entries, replace=False)))
        worst = 0.0
        for j in probe:
            orig = flat[j]
            flat[j] = orig + epsilon
            up = float(loss_fn().data)
            flat[j] = orig - epsilon
            down = float(loss_fn().data)
            flat[j] = orig
            numeric = (up - down) / (2.0 * epsilon)
            a = float(grad.reshape(-1)[j])
            # additive floor keeps near-zero gradient pairs from blowing up
            # the ratio on finite-difference noise
            rel = abs(a - numeric) / (max(abs(a), abs(numeric)) + 1e-3)
            worst = max(worst, rel)
        report[name] = worst
    return GradCheckReport(per_param=report, tolerance=tolerance)
