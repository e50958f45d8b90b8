"""Second-order kernels supported on [-1, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Each kernel is a probability density on [-1, 1], Lipschitz on its support.
_FAMILIES = {
    "epanechnikov": lambda u: 0.75 * (1.0 - u * u),
    "triangular": lambda u: 1.0 - np.abs(u),
    "quartic": lambda u: 0.9375 * (1.0 - u * u) ** 2,
}


@dataclass(frozen=True)
class KernelSpec:
    """A named kernel family; evaluates to 0 outside [-1, 1]."""

    family: str = "epanechnikov"

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise ValueError(
                f"unknown kernel family {self.family!r}; "
                f"choose from {sorted(_FAMILIES)}"
            )

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.abs(u) <= 1.0
        out = np.zeros_like(u)
        out[inside] = _FAMILIES[self.family](u[inside])
        return out


def kernel_families() -> tuple[str, ...]:
    return tuple(sorted(_FAMILIES))
