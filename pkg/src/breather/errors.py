"""Exception hierarchy shared by all subpackages."""


class BreatherError(Exception):
    """Base class for every error raised by this package."""


class KernelError(BreatherError):
    pass


class NonFiniteMeasure(KernelError):
    """Total variation is infinite or the density quadrature does not settle."""


class EmptyRegularSet(KernelError):
    """No temporal mode survives the kernel; the effective problem is empty."""


class NonpositiveKernel(KernelError):
    """Some nonlinear-kernel coefficient on the regular set is not positive."""


class DiscretizationError(BreatherError):
    pass


class ModeMismatch(DiscretizationError):
    pass


class AliasRisk(DiscretizationError):
    """Too few time samples for an exact cubic product."""


class NonElliptic(DiscretizationError):
    """The mode potential V_k is not strictly positive somewhere on the grid."""


class SingularOperator(DiscretizationError):
    pass


class FieldFormatError(DiscretizationError):
    """Malformed field file or checksum mismatch."""


class SolverError(BreatherError):
    pass


class NoPositiveQuartic(SolverError):
    """The ray through u never reaches the Nehari manifold (int h u^4 <= 0)."""


class MaxIterExceeded(SolverError):
    pass


class NoDescentDirection(SolverError):
    pass


class ConfigError(BreatherError):
    pass
