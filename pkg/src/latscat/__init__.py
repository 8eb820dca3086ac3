"""latscat: desk-scale laboratory for long-range lattice scattering.

Subpackages build on each other roughly in this order: lattice state and
multiplier calculus, potential extension, classical flow probes,
modifier-phase construction, unitary propagation, wave-operator
diagnostics, and the experiment runner.
"""

from .flow_kernels import KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
