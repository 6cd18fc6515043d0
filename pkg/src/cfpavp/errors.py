"""Exception hierarchy shared by the analytical and simulation modules."""


class CfpavpError(Exception):
    """Base class for all library errors."""

    code = "ERROR"


class ConfigError(CfpavpError, ValueError):
    """Invalid or incomplete parameter document."""

    code = "CONFIG_ERROR"

    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)


class NumericalError(CfpavpError, ArithmeticError):
    """A quadrature or series evaluation failed to meet its tolerance."""

    code = "NUMERICAL_FAILURE"

    def __init__(self, message, estimate=None, error_bound=None, **context):
        self.estimate = estimate
        self.error_bound = error_bound
        self.context = context
        extra = ", ".join(f"{k}={v!r}" for k, v in context.items())
        if estimate is not None:
            extra = ", ".join(filter(None, [extra, f"estimate={estimate!r}", f"error={error_bound!r}"]))
        super().__init__(f"{message} ({extra})" if extra else message)


class NoArrivalsError(CfpavpError):
    """Sensing coverage is zero, so the packet arrival process is empty."""

    code = "NO_ARRIVALS"


class NoCommTierError(CfpavpError):
    """No communication access points (lambda_c = 0 or an empty realization)."""

    code = "NO_COMM_TIER"


class UnstableServiceError(CfpavpError):
    """The service-time MGF has a pole inside the SINR integration range."""

    code = "UNSTABLE_SERVICE"


class BoundUndefinedError(CfpavpError):
    """The SNC bound is undefined at the requested theta (queue unstable or MGF infinite)."""

    code = "BOUND_UNDEFINED"


class InfeasibleError(CfpavpError):
    """No stable theta exists for any evaluated configuration."""

    code = "INFEASIBLE"
