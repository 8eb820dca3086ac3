"""Potential families on the lattice and their continuum evaluators.

A PotentialSpec names the lattice data; `continuum()` returns the smooth
evaluator used by the classical flow and the modifier construction,
either as the closed-form power profile or through a window-function
interpolation attached with `attach_extension`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .lattice import LatticeBox

__all__ = ["PotentialSpec", "ContinuumPotential"]


class ContinuumPotential:
    """Callable pair (value, gradient) on R^d."""

    def __init__(self, value, gradient, dimension: int):
        self._value = value
        self._gradient = gradient
        self.dimension = dimension

    def __call__(self, x) -> np.ndarray:
        """V at points of shape (..., d)."""
        return self._value(np.asarray(x, dtype=float))

    def gradient(self, x) -> np.ndarray:
        """grad V at points of shape (..., d), same shape as input."""
        return self._gradient(np.asarray(x, dtype=float))


def _power_value(c: float, mu: float):
    def value(x):
        r2 = np.sum(x**2, axis=-1)
        return c * (1.0 + r2) ** (-mu / 2.0)

    return value


def _power_gradient(c: float, mu: float):
    def gradient(x):
        r2 = np.sum(x**2, axis=-1)
        return (-c * mu) * (1.0 + r2)[..., None] ** (-mu / 2.0 - 1.0) * x

    return gradient


@dataclass
class PotentialSpec:
    """Lattice potential description.

    family: "power" (V[n] = c * (1+|n|^2)^(-mu/2)), "tabulated", or "zero".
    extension_policy: "analytic" evaluates the closed form on R^d;
    "window" requires an interpolation built by the extension module and
    attached via attach_extension().
    """

    family: str = "power"
    c: float = 1.0
    mu: float = 1.0
    extension_policy: str = "analytic"
    table: Optional[np.ndarray] = None
    table_box: Optional[LatticeBox] = None
    _extended: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.family not in ("power", "tabulated", "zero"):
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.extension_policy not in ("analytic", "window"):
            raise ValueError(f"unknown extension policy {self.extension_policy!r}")
        if self.family == "power" and self.mu <= 0:
            raise ValueError("power family needs mu > 0")
        if self.family == "tabulated":
            if self.table is None or self.table_box is None:
                raise ValueError("tabulated family needs table and table_box")
            self.table = np.asarray(self.table, dtype=float)
            if self.table.shape != self.table_box.shape:
                raise ValueError("table shape does not match its box")
            if self.extension_policy == "analytic":
                raise ValueError("tabulated potentials have no analytic extension")

    # -- lattice side ---------------------------------------------------------

    def lattice_value(self, n) -> np.ndarray:
        """V at integer sites, shape (..., d) -> (...)."""
        n = np.asarray(n, dtype=float)
        if self.family == "zero":
            return np.zeros(n.shape[:-1])
        if self.family == "power":
            return _power_value(self.c, self.mu)(n)
        idx = np.asarray(np.rint(n), dtype=int) + self.table_box.half_width
        if np.any(idx < 0) or np.any(idx >= self.table_box.points_per_axis):
            raise ValueError("site outside the tabulated box")
        return self.table[tuple(np.moveaxis(idx, -1, 0))]

    def on_box(self, box: LatticeBox) -> np.ndarray:
        """V sampled on every site of `box`, shape box.shape."""
        ax = box.site_axis().astype(float)
        mesh = np.meshgrid(*([ax] * box.dimension), indexing="ij")
        pts = np.stack(mesh, axis=-1)
        return self.lattice_value(pts)

    def sup_abs(self) -> float:
        if self.family == "zero":
            return 0.0
        if self.family == "power":
            return abs(self.c)
        return float(np.max(np.abs(self.table)))

    # -- continuum side -------------------------------------------------------

    def attach_extension(self, extended) -> None:
        """Attach a window-function interpolation (see latscat.extension)."""
        self._extended = extended

    def continuum(self, dimension: int) -> ContinuumPotential:
        if self.family == "zero":
            return ContinuumPotential(
                lambda x: np.zeros(x.shape[:-1]), lambda x: np.zeros_like(x), dimension
            )
        if self.extension_policy == "analytic":
            return ContinuumPotential(
                _power_value(self.c, self.mu), _power_gradient(self.c, self.mu), dimension
            )
        if self._extended is None:
            raise RuntimeError(
                "extension policy is 'window' but no window extension is attached; "
                "build one with latscat.extension.extend_potential"
            )
        ext = self._extended
        return ContinuumPotential(ext.__call__, ext.gradient, dimension)

    # -- radial bounds (power family is radial) --------------------------------

    def decay_bounds(self, radius: float) -> tuple[float, float]:
        """(sup |V|, sup |x.grad V|) over {|x| >= radius}.

        Exact monotonicity of the radial profiles is used for the power
        family; zero potential returns zeros.
        """
        if self.family == "zero":
            return 0.0, 0.0
        if self.family != "power":
            raise ValueError("decay bounds available for the power family only")
        c, mu = abs(self.c), self.mu
        sup_v = c * (1.0 + radius**2) ** (-mu / 2.0)
        # |x.grad V|(r) = c*mu*r^2*(1+r^2)^(-(mu+2)/2), unimodal with peak at
        # r^2 = 2/mu; beyond the peak it decreases.
        rpeak = np.sqrt(2.0 / mu)
        r = max(radius, 0.0)
        if r >= rpeak:
            sup_xg = c * mu * r**2 * (1.0 + r**2) ** (-(mu + 2.0) / 2.0)
        else:
            sup_xg = c * mu * rpeak**2 * (1.0 + rpeak**2) ** (-(mu + 2.0) / 2.0)
        return float(sup_v), float(sup_xg)
