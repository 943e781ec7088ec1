"""Model parameters and asymptotic scaling constants.

Everything downstream consumes these two records.  Both are immutable,
so they can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ASEPParams:
    """Hop probabilities and the derived constants gamma = q - p, tau = p/q.

    q is stored as 1 - p exactly once so that p + q == 1 bit-exactly.
    tau is None when q == 0 (p = 1 is rejected anyway, so in practice
    tau is always defined and equals 0 at p = 0).
    """

    p: float
    q: float
    gamma: float
    tau: float

    @property
    def drift_left(self) -> bool:
        return self.p < self.q


@dataclass(frozen=True)
class ScalingConstants:
    """Constants of the t^{1/3} edge scaling at particle-density ratio sigma."""

    sigma: float
    c1: float
    c2: float
    c3: float
    xi_saddle: float


def make_params(p: float) -> ASEPParams:
    """Build an ASEPParams record from the right-hop probability p.

    0 <= p < 1 is required; the evaluators additionally require p < 1/2
    (left drift) but the simulator accepts any p in [0, 1).
    """
    if not (0.0 <= p < 1.0):
        raise ValueError(f"p must satisfy 0 <= p < 1, got {p}")
    q = 1.0 - p
    return ASEPParams(p=p, q=q, gamma=q - p, tau=p / q)


def scaling_constants(sigma: float) -> ScalingConstants:
    """Scaling constants c1, c2, c3 and the saddle location for m/t = sigma.

    c1 = -1 + 2 sqrt(sigma)
    c2 = sigma^{-1/6} (1 - sqrt(sigma))^{2/3}
    c3 = sigma^{-1/6} (1 - sqrt(sigma))^{5/3}
    xi = -sqrt(sigma) / (1 - sqrt(sigma))
    """
    if not (0.0 < sigma < 1.0):
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    rs = math.sqrt(sigma)
    c1 = -1.0 + 2.0 * rs
    c2 = sigma ** (-1.0 / 6.0) * (1.0 - rs) ** (2.0 / 3.0)
    c3 = sigma ** (-1.0 / 6.0) * (1.0 - rs) ** (5.0 / 3.0)
    xi = -rs / (1.0 - rs)
    return ScalingConstants(sigma=sigma, c1=c1, c2=c2, c3=c3, xi_saddle=xi)
