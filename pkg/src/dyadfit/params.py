"""Parameter vector layout for the dyad model.

The full parameter vector has length p = 3*m + 2 for m feature groups,
laid out as

    [reciprocity, density, homophily (m), out_effects (m), in_effects (m)]

All code in the package indexes parameters through this one class so the
layout is defined in a single place.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


def param_length(n_groups: int) -> int:
    """Length of the full parameter vector for ``n_groups`` feature groups."""
    return 3 * n_groups + 2


def block_labels(n_groups: int, group_names=None) -> list[str]:
    """Human-readable coordinate labels, used in reports and error messages."""
    if group_names is None:
        group_names = [f"g{k}" for k in range(n_groups)]
    labels = ["reciprocity", "density"]
    labels += [f"homophily[{name}]" for name in group_names]
    labels += [f"out[{name}]" for name in group_names]
    labels += [f"in[{name}]" for name in group_names]
    return labels


@dataclass(frozen=True)
class ParamVector:
    """Immutable parameter vector with named blocks.

    Parameters
    ----------
    theta : array of shape (3*m + 2,)
        Full coefficient vector.
    n_groups : int
        Number of feature groups m.
    """

    theta: np.ndarray
    n_groups: int

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1:
            raise DataError("parameter vector must be one-dimensional")
        if self.n_groups < 0:
            raise DataError("n_groups must be non-negative")
        if theta.shape[0] != param_length(self.n_groups):
            raise DataError(
                f"parameter vector has length {theta.shape[0]}, "
                f"expected {param_length(self.n_groups)} for {self.n_groups} groups"
            )
        if not np.all(np.isfinite(theta)):
            raise DataError("parameter vector contains non-finite entries")
        theta = theta.copy()
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, n_groups: int) -> "ParamVector":
        return cls(np.zeros(param_length(n_groups)), n_groups)

    @classmethod
    def from_blocks(cls, reciprocity, density, homophily, out_effects, in_effects) -> "ParamVector":
        homophily = np.atleast_1d(np.asarray(homophily, dtype=np.float64))
        out_effects = np.atleast_1d(np.asarray(out_effects, dtype=np.float64))
        in_effects = np.atleast_1d(np.asarray(in_effects, dtype=np.float64))
        m = homophily.shape[0]
        if out_effects.shape[0] != m or in_effects.shape[0] != m:
            raise DataError("homophily, out_effects, in_effects must have equal length")
        theta = np.concatenate([[reciprocity, density], homophily, out_effects, in_effects])
        return cls(theta, m)

    def __len__(self) -> int:
        return self.theta.shape[0]

    @property
    def reciprocity(self) -> float:
        return float(self.theta[0])

    @property
    def density(self) -> float:
        return float(self.theta[1])

    @property
    def homophily(self) -> np.ndarray:
        return self.theta[2 : 2 + self.n_groups]

    @property
    def out_effects(self) -> np.ndarray:
        return self.theta[2 + self.n_groups : 2 + 2 * self.n_groups]

    @property
    def in_effects(self) -> np.ndarray:
        return self.theta[2 + 2 * self.n_groups : 2 + 3 * self.n_groups]

    def as_array(self) -> np.ndarray:
        """Writable copy of the coefficient vector."""
        return np.array(self.theta)

    def replace(self, theta: np.ndarray) -> "ParamVector":
        """New ParamVector with the same group count and new coefficients."""
        return ParamVector(theta, self.n_groups)
