"""Exception types shared across the package."""


class GadError(Exception):
    """Invalid input or configuration (CLI exit code 1)."""


class BalanceError(GadError):
    """Partition balance constraint cannot be met."""


class NumericalError(Exception):
    """Non-finite values encountered during training (CLI exit code 2)."""
