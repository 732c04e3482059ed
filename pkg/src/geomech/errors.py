"""Exception hierarchy shared by every module."""


class MechanicsError(Exception):
    """Base class for all errors raised by geomech."""


class ArityError(MechanicsError, ValueError):
    """Argument length does not match the declared dimension of a field or map."""


class InputError(MechanicsError, ValueError):
    """Structurally invalid input (dependent vectors, degenerate sample sets, ...)."""


class KindMismatchError(MechanicsError, ValueError):
    """A tangent-chart object was given where a phase-chart one is required, or vice versa."""


class RankError(MechanicsError, ValueError):
    """A form that must be nondegenerate is not."""


class NumericError(MechanicsError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


class NumericDomainError(NumericError):
    """A field evaluated to a non-finite number."""


class ConvexityError(NumericError):
    """The fibre Hessian is not positive definite where strong convexity is required."""


class DefinitenessError(NumericError):
    """A metric tensor failed its symmetry or positive-definiteness check."""


class OutOfImageError(NumericError):
    """Newton inversion of a fibre derivative did not converge."""


class ConvergenceError(NumericError):
    """An iterative solver (implicit step, generating-function solve) did not converge."""


class SingularJacobianError(NumericError):
    """A Jacobian that must be invertible is singular."""


class BlowUpError(NumericError):
    """An integrator produced a non-finite state.

    ``last_good_index`` is the index of the last finite sample.
    """

    def __init__(self, message, last_good_index):
        super().__init__(f"{message} (last good sample index {last_good_index})")
        self.last_good_index = last_good_index
