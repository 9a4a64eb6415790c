"""The scalar equation ``y^(n) + q_{n-1} y^(n-1) + ... + q_0 y = 0``."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, InvalidArgumentError

__all__ = ["ScalarODE"]


@dataclass(frozen=True)
class ScalarODE:
    """Order-``n`` linear scalar equation on ``interval``.

    ``coeffs`` is a vectorized callable: given an array of N abscissae it
    returns an array of shape (n, N) whose row j holds ``q_j``.
    """

    order: int
    interval: tuple
    coeffs: Callable

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 2:
            raise InvalidArgumentError(f"order must be an integer >= 2, got {self.order!r}")
        a, b = (float(x) for x in self.interval)
        if not a < b:
            raise InvalidArgumentError(f"degenerate interval ({a}, {b})")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "interval", (a, b))

    @property
    def a(self):
        return self.interval[0]

    @property
    def b(self):
        return self.interval[1]

    def q(self, t):
        """Coefficient values at ``t``, shape (n, len(t))."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        a, b = self.interval
        if np.any(t < a) or np.any(t > b):
            raise DomainError(f"coefficients requested outside [{a}, {b}]")
        q = np.asarray(self.coeffs(t), dtype=complex)
        q = np.broadcast_to(q, (self.order, t.size)) if q.ndim < 2 else q
        if q.shape != (self.order, t.size):
            raise InvalidArgumentError(
                f"coefficient callback returned shape {q.shape}, "
                f"expected {(self.order, t.size)}")
        if not np.all(np.isfinite(q)):
            raise InvalidArgumentError("coefficient callback returned non-finite values")
        return q
