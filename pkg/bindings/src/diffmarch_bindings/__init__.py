"""Array-in/array-out adapter around the diffmarch solver.

Exposes the solver as a paired forward/backward operation so it can sit
inside an external training loop as a custom differentiable op: the
forward call returns the distance array plus a single-use token retaining
the causal record, and the backward call consumes the token to produce the
potential gradient.  All outputs are bitwise-equal to the core library's.
"""

from .adapter import SolveToken, py_fit, py_soft_mask, py_solve, py_vjp

__version__ = "0.1.0"
