"""Exception hierarchy.

Validation problems (bad configs, bad shapes, reducible chains) derive from
:class:`ModelError`; numerical failures during evaluation derive from
:class:`NumericalError`. The command line maps the two families to distinct
exit codes.
"""


class ModelError(ValueError):
    """Invalid model description or inconsistent inputs."""


class ReducibleChainError(ModelError):
    """The transition kernel has no unique stationary distribution."""


class NumericalError(ArithmeticError):
    """Evaluation failed for numerical reasons."""


class ImpossibleObservation(NumericalError):
    """An observation has zero density under every reachable state."""

    def __init__(self, step, message=None):
        self.step = step
        if message is None:
            message = f"impossible observation at step {step}"
        super().__init__(message)


class ChainUnderflowError(NumericalError):
    """Linear-space chain evaluation underflowed to exactly zero."""


class EnumerationBudgetError(ModelError):
    """Brute-force path enumeration would exceed the allowed budget."""
