"""Exception hierarchy shared by all modules."""


class CavityCatError(Exception):
    """Base class for every error raised by the package."""


class DomainError(CavityCatError, ValueError):
    """An argument lies outside the domain of the operation."""


class BasisMismatchError(CavityCatError, TypeError):
    """Operands live on different tensor-product bases."""


class TruncationError(CavityCatError):
    """A Fock cutoff is too small for the requested state."""

    def __init__(self, message, required_cutoff=None):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class LeakageError(TruncationError):
    """Population reached the top Fock levels during evolution."""


class SingularityError(CavityCatError, ZeroDivisionError):
    """A formula would divide by zero (e.g. zero detuning)."""


class ResourceError(CavityCatError):
    """The requested Hilbert space exceeds the configured dimension limit."""


class NonHermitianError(CavityCatError, TypeError):
    """An operator used as a Hamiltonian is not Hermitian."""


class PostSelectionError(CavityCatError):
    """A measurement outcome has (numerically) zero probability."""


class DegenerateBranchError(CavityCatError):
    """An analytic superposition has vanishing normalization."""


class ContractViolation(CavityCatError):
    """A state violates an operation's precondition."""


class NotDispersiveError(CavityCatError):
    """Dressed states cannot be matched to bare states (near resonance)."""


class ConfigParseError(CavityCatError):
    """The scenario document is not well formed."""


class ConfigValidationError(CavityCatError):
    """The scenario document is well formed but has invalid values."""
