"""
Descriptions:
1. Error types raised by the simulation modules
2. Each error carries the CLI exit code and the config field / diagram slot it concerns
3. Only main.py turns them into "ERR:<code>:<field>" lines and exit codes

Exit codes:
- 2: configuration could not be parsed or validated
- 3: physicality violation (non-Hermitian, non-contraction, non-PSD slot, DC-null state, ...)
- 4: degenerate estimator (vanishing overlap, zero post-selected counts)
"""


class WeakValueSimError(Exception):
    exit_code = 1

    def __init__(self, message: str, field: str = "-"):
        super().__init__(message)
        self.field = field

    def reason(self) -> str:
        # Single line, machine-parseable prefix first
        text = str(self).replace("\n", " ")
        return f"ERR:{self.exit_code}:{self.field} {text}"


# Config errors (exit 2)
class ConfigError(WeakValueSimError):
    exit_code = 2


# Physicality errors (exit 3)
class PhysicalityError(WeakValueSimError, ValueError):
    exit_code = 3


class DimensionMismatchError(PhysicalityError):
    pass


class NonHermitianError(PhysicalityError):
    pass


class RealizabilityError(PhysicalityError):
    pass


class InvalidDistributionError(PhysicalityError):
    pass


class DCNullError(PhysicalityError):
    def __init__(self, message: str = "state has no zero-momentum component", field: str = "state"):
        super().__init__(message, field)


class NotCompilableError(PhysicalityError):
    def __init__(self, slot: int, message: str):
        super().__init__(f"slot {slot}: {message}", field=f"slot{slot}")
        self.slot = slot


class ConvergenceError(PhysicalityError):
    pass


# Degenerate estimators (exit 4)
class DegenerateEstimatorError(WeakValueSimError, ArithmeticError):
    exit_code = 4


class UndefinedWeakValueError(DegenerateEstimatorError):
    def __init__(self, message: str = "pre- and post-selected states are orthogonal", field: str = "boundary"):
        super().__init__(message, field)


class UndefinedEstimateError(DegenerateEstimatorError):
    def __init__(self, message: str, counts=None, field: str = "counts"):
        super().__init__(message, field)
        self.counts = counts
