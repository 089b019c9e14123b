"""Exceptions raised by the numerical core"""


class VerificationError(Exception):
    """Base error for every numerical check"""
    pass


class NonIntegrableInputError(VerificationError):
    """Scaling integral requested at the origin"""
    pass


class BranchMismatchError(VerificationError):
    """Exponent outside the branch of a representation formula"""
    pass


class DegenerateSamplerError(VerificationError):
    """Rejection sampler exhausted its draw budget"""
    pass


class InvalidProfileError(VerificationError):
    """Grid or profile violates its invariants"""
    pass


class NodeOutsideExtentError(VerificationError):
    """Radial node does not fit inside the sampled field"""
    pass


class SingularPointError(VerificationError):
    """Reduced kernel evaluated on its diagonal"""
    pass


class SupportMismatchError(VerificationError):
    """Target grid does not cover the support of a profile"""
    pass


class ZeroDenominatorError(VerificationError):
    """Ratio requested with a vanishing denominator"""
    pass


class NaNDetectedError(VerificationError):
    """Iteration produced a non-finite value"""
    pass


class NonzeroMeanError(VerificationError):
    """Multiplier applied to a field with zero-frequency content"""
    pass


class ResolutionInsufficientError(VerificationError):
    """No single angular mode dominates the transformed field"""
    pass


class TailTooHeavyError(VerificationError):
    """Heat-time integrand has not decayed by the end of the time grid"""
    pass


class SurrogateValidationError(VerificationError):
    """Supplied partials of a surrogate profile disagree with finite differences"""
    pass


class InvalidConfigError(VerificationError):
    """Command configuration is out of range or malformed"""
    pass
