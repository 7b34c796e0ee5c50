"""Shared configuration for walk feature maps."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class FeatureConfig:
    """Variation flags and hyperparameters of the walk feature map.

    ``diff`` lifts attribute increments instead of raw attributes;
    ``zero_start`` includes the start-node factor in front of the walk
    product; ``time_param`` augments every lift input with the step index,
    so lifts act on dimension d+1.  ``lift_coeffs`` overrides the
    per-degree lift scaling c_0..c_M (default c_m = 1/m!, and c_0 is
    pinned to 1 so the algebra unit is preserved).
    """

    walk_length: int = 1
    max_degree: int = 1
    rank: int = 1
    diff: bool = True
    zero_start: bool = True
    time_param: bool = False
    lift_coeffs: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.walk_length < 0:
            raise ValueError(f"walk_length must be >= 0, got {self.walk_length}")
        if self.max_degree < 1:
            raise ValueError(f"max_degree must be >= 1, got {self.max_degree}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.lift_coeffs is not None:
            coeffs = tuple(float(c) for c in self.lift_coeffs)
            if not coeffs or coeffs[0] != 1.0:
                raise ValueError("lift_coeffs must start with c_0 == 1")
            if not all(math.isfinite(c) for c in coeffs):
                raise ValueError("lift_coeffs must be finite")
            object.__setattr__(self, "lift_coeffs", coeffs)

    def lift_dim(self, d: int) -> int:
        """Dimension seen by the algebra lift for d-dimensional attributes."""
        return d + 1 if self.time_param else d

    @property
    def step_homogeneous(self) -> bool:
        """Whether one transition matrix serves every walk step.

        Only the raw-attribute map with time parametrization depends on the
        step index, because the lift input is then (step, f(j)); increments
        always carry time increment 1.
        """
        return self.diff or not self.time_param

    def coefficient(self, m: int) -> float:
        """Lift coefficient c_m; defaults to 1/m!."""
        if self.lift_coeffs is not None:
            if m >= len(self.lift_coeffs):
                raise ValueError(
                    f"lift_coeffs covers degrees <= {len(self.lift_coeffs) - 1}, got {m}"
                )
            return self.lift_coeffs[m]
        return 1.0 / math.factorial(m)

    def coefficients(self, max_degree: int):
        """Coefficients c_0..c_max_degree as a list."""
        return [self.coefficient(m) for m in range(max_degree + 1)]
