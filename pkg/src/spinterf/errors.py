"""Exception types shared across modules."""


class NumericalContractError(ArithmeticError):
    """A computed object violated a contract it must satisfy (unitarity, trace, ...)."""
