"""Exception types shared across the package."""


class ResilexError(Exception):
    """Base class for all package errors."""


class DegenerateAngle(ResilexError):
    """SMIB feedback-linearizing control is undefined near sin(delta) = 0."""


class NotHurwitz(ResilexError):
    """The closed-loop matrix has an eigenvalue with real part >= -1e-12."""


class SolveFailed(ResilexError):
    """A linear solve produced a residual above its contract tolerance."""


class UnsupportedPlant(ResilexError):
    """Certificate derivation is only defined for the linear third-order plant."""


class EpsilonTooSmall(ResilexError):
    """eps <= beta1_bar * alpha_hi / alpha_lo, so the decay rate would be <= 0."""


class TooManyControllers(ResilexError):
    """n >= 1 + t_r / t_c: authentication would consume every working period."""


class DenominatorNonpositive(ResilexError):
    """The healthy-controller bound is undefined: even n_1 = n fails the condition."""


class ScheduleInfeasible(ResilexError):
    """A switch instant arrived before the incoming controller finished re-init."""


class NonFiniteState(ResilexError):
    """Integration produced a NaN or Inf state component."""


class AllRunsDiverged(ResilexError):
    """Every run of an ensemble hit a non-finite state."""


class SchemaError(ResilexError):
    """Scenario file failed validation; message names the offending field."""


class InfeasibleTiming(ResilexError):
    """Scenario timing violates a feasibility constraint (e.g. n >= 1 + t_r/t_c)."""
