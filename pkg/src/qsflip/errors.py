"""Shared exception types."""


class NumericalFailure(RuntimeError):
    """An iterative routine failed to reach its accuracy or convergence target.

    Distinct from ValueError, which covers invalid inputs and domain
    violations; this one means the inputs were legal but the computation
    could not deliver a trustworthy result.
    """
