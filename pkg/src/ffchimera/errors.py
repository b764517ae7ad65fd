"""Shared exception types with a stable exit-code contract.

Exit codes used by the CLI: usage errors exit 2 (argparse), budget errors
exit 3, failed mathematical-identity assertions exit 4.
"""


class BudgetExceededError(RuntimeError):
    """An enumeration or sampling request exceeds the configured budget."""

    exit_code = 3


class IdentityCheckError(AssertionError):
    """A mathematical identity that must hold exactly (or to stated
    tolerance) failed.  The message names the violated invariant."""

    exit_code = 4


class NegativeDensityError(IdentityCheckError):
    """Fourier inversion produced a negative value beyond tolerance."""


class DegenerateEnsembleError(IdentityCheckError):
    """Importance-sampling ensemble collapsed (effective sample size < 10)."""
