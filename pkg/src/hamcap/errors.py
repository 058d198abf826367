"""Exception types raised across the package."""


class HamcapError(Exception):
    """Base class for all package errors."""


class NonContinuousLoop(HamcapError):
    pass


class OutOfChart(HamcapError):
    pass


class BadProfileParams(HamcapError):
    pass


class BadParams(HamcapError):
    pass


class ThresholdNotMet(HamcapError):
    pass


class NoEpsilon(HamcapError):
    pass


class NoRoot(HamcapError):
    pass


class NoValidBeta(HamcapError):
    pass


class NewtonDivergence(HamcapError):
    def __init__(self, t, residual):
        super().__init__(f"implicit step failed to converge at t={t:.6g} (residual {residual:.3e})")
        self.t = t
        self.residual = residual


class LeftChart(HamcapError):
    def __init__(self, t, p):
        super().__init__(f"trajectory left the chart at t={t:.6g} (p={p})")
        self.t = t
        self.p = p


class ClassMismatch(HamcapError):
    pass


class AmbiguousCluster(HamcapError):
    pass


class NotInHalfStrip(HamcapError):
    pass


class EscapesWindow(HamcapError):
    def __init__(self, p_range, k):
        lo, hi = p_range
        super().__init__(f"orbit reaches p in [{lo:.4f}, {hi:.4f}], not inside |p| < {k}")
        self.p_range = p_range
        self.k = k


class BracketInvalid(HamcapError):
    pass


class ConfigError(HamcapError):
    pass
