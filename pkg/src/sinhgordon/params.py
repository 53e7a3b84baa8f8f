"""Problem parameters and small value types shared by every module."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass


class DomainError(ValueError):
    """An input lies outside the domain where a formula or solver is defined."""


@dataclass(frozen=True)
class ProblemParams:
    """Inputs of the radial nonlocal sinh-Gordon problem in the ball B_R.

    ``dim`` may be any real N > 1; every closed-form expression is analytic in N.
    A negative ``a0`` is accepted and handled through the odd symmetry u -> -u.
    """

    dim: float = 2.0
    radius: float = 1.0
    gamma: float = 1.0
    a0: float = 2.0
    eps: float = 0.01

    def __post_init__(self):
        for name in ("dim", "radius", "gamma", "a0", "eps"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
        if self.dim <= 1:
            raise DomainError(f"dim must exceed 1, got {self.dim}")
        if self.radius <= 0:
            raise DomainError(f"radius must be positive, got {self.radius}")
        if self.gamma <= 0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.eps <= 0:
            raise DomainError(f"eps must be positive, got {self.eps}")

    def with_eps(self, eps: float) -> ProblemParams:
        return ProblemParams(self.dim, self.radius, self.gamma, self.a0, eps)

    def with_a0(self, a0: float) -> ProblemParams:
        return ProblemParams(self.dim, self.radius, self.gamma, a0, self.eps)

    @property
    def volume(self) -> float:
        """|B_R| under the normalisation |dB_1| = 1."""
        return self.radius**self.dim / self.dim

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LayerPoint:
    """Layer coordinates (p, q) of the radius R - p*eps - (q/R)*eps**2."""

    p: float
    q: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise DomainError("layer coordinates must be finite")
        if self.p < 0:
            raise DomainError(f"p must be non-negative, got {self.p}")

    def radius(self, params: ProblemParams) -> float:
        R, eps = params.radius, params.eps
        r = R - self.p * eps - self.q * eps**2 / R
        if not 0.0 <= r <= R:
            raise DomainError(
                f"layer point (p={self.p}, q={self.q}) maps to r={r} outside [0, {R}]"
            )
        return r


@dataclass(frozen=True)
class TwoTerm:
    """Two-term asymptotic value eps**power * (lead + corr * eps).

    Keeping the leading coefficient and the correction coefficient apart makes it
    impossible to mix orders by accident; ``value`` collapses it to a float.
    """

    lead: float
    corr: float
    power: int = 0

    def value(self, eps: float) -> float:
        return eps**self.power * (self.lead + self.corr * eps)

    def __neg__(self) -> TwoTerm:
        return TwoTerm(-self.lead, -self.corr, self.power)

    def __sub__(self, other: TwoTerm) -> TwoTerm:
        if other.power != self.power:
            raise ValueError("cannot subtract two-term values of different order")
        return TwoTerm(self.lead - other.lead, self.corr - other.corr, self.power)
