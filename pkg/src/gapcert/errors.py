"""Exception hierarchy shared by all gapcert modules."""


class GapcertError(Exception):
    """Base class for every error raised by gapcert."""


class DimensionMismatchError(GapcertError, ValueError):
    """Two objects live on lattices (or Hilbert spaces) of different dimension."""


class EmptyRegionError(GapcertError, ValueError):
    pass


class DecompositionError(GapcertError, ValueError):
    """An s-decomposition was requested outside the hypotheses of the construction."""


class ModelError(GapcertError, ValueError):
    """Unknown builtin, bad parameters, or an invalid interaction matrix."""


class BudgetExceededError(GapcertError, MemoryError):
    pass


class AmbiguousKernelError(GapcertError, ArithmeticError):
    """An eigenvalue sits in [tol/10, tol]; the kernel cannot be separated reliably."""


class NotFrustrationFreeError(GapcertError, ArithmeticError):
    pass


class ConvergenceError(GapcertError, ArithmeticError):
    pass


class SplitError(GapcertError, ValueError):
    """The requested M_A/M_B split cannot keep both factors inside their regions."""


class NotAProjectorError(GapcertError, ValueError):
    """An operator expected to be an orthogonal projection is not one."""


class ScheduleError(GapcertError, ValueError):
    """An s_k schedule is not summable or has invalid parameters."""
