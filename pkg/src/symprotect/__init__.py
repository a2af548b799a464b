"""symprotect - simulations of a symmetry-protected superconducting qubit.

Spin-chain protection diagnostics, the four-node ring circuit that realizes
them, its decoherence budget, fabrication-disorder Monte Carlo and qubit
operation dynamics.
"""

__version__ = "1.0.0"
__author__ = "symprotect developers"

__all__ = ["__version__"]
