"""Exception types raised by the numerical routines."""


class KickedCircleError(Exception):
    pass


class DegenerateCritical(KickedCircleError):
    """A critical point of the forcing profile has a (numerically) vanishing second derivative."""


class ScanTooCoarse(KickedCircleError):
    """Root bracketing on the scan grid is ambiguous."""


class TangentRoot(KickedCircleError):
    """A fold of the circle map is degenerate (tau' and tau'' vanish together)."""


class EpsilonZero(KickedCircleError):
    pass


class KernelUnderresolved(KickedCircleError):
    """The kick window spans too few grid cells for the Ulam discretization."""


class NoConvergence(KickedCircleError):
    def __init__(self, message, density=None):
        super().__init__(message)
        self.density = density


class ComponentMerge(KickedCircleError):
    """I_1 does not split into one nondegenerate fold interval per critical point."""


class TrapViolation(KickedCircleError):
    pass


class TrapEscape(KickedCircleError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class EmptyAtlas(KickedCircleError):
    pass


class ConfigError(KickedCircleError):
    def __init__(self, errors):
        super().__init__("; ".join(errors))
        self.errors = list(errors)
