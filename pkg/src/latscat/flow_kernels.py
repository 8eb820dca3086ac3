"""Import-time selection of the flow integration kernel.

Prefers the compiled Cython kernel for the power-family potential and
falls back to the NumPy twin when the extension is missing or when
LATSCAT_PURE_PYTHON is set to a non-empty value.  Generic potentials
always run through the NumPy kernel (they need Python callbacks).
"""

from __future__ import annotations

import os

from . import _flow_np

__all__ = ["leapfrog_power", "leapfrog_generic", "KERNEL_BACKEND"]

leapfrog_generic = _flow_np.leapfrog_generic

if os.environ.get("LATSCAT_PURE_PYTHON"):
    leapfrog_power = _flow_np.leapfrog_power
    KERNEL_BACKEND = "numpy (forced)"
else:
    try:
        from . import _flow_cy

        leapfrog_power = _flow_cy.leapfrog_power
        KERNEL_BACKEND = "cython"
    except ImportError:
        leapfrog_power = _flow_np.leapfrog_power
        KERNEL_BACKEND = "numpy"
