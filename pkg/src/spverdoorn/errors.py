"""Exception hierarchy.

Validation problems (bad input files, inconsistent shapes, islands) derive
from :class:`ValidationError`; failures of the numerics themselves (rank
deficiency, boundary optima, undefined statistics) derive from
:class:`NumericalError`. The CLI maps the two families to exit codes 1 and 2.
"""


class SpVerdoornError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(SpVerdoornError, ValueError):
    pass


class NumericalError(SpVerdoornError, ArithmeticError):
    pass


class IslandError(ValidationError):
    def __init__(self, island_ids):
        self.island_ids = tuple(island_ids)
        super().__init__(
            "islands (no neighbors within the cutoff): " + ", ".join(self.island_ids)
        )


class DuplicateCoordinateError(ValidationError):
    def __init__(self, first, second):
        self.pair = (first, second)
        super().__init__(f"regions {first!r} and {second!r} share identical coordinates")


class AsymmetricWeightsError(ValidationError):
    pass


class DimensionMismatchError(ValidationError):
    pass


class ConstantVariableError(ValidationError):
    pass


class PanelError(ValidationError):
    pass


class InsufficientObservationsError(ValidationError):
    pass


class RankDeficientError(NumericalError):
    pass


class DegenerateResidualsError(NumericalError):
    pass


class BoundarySolutionError(NumericalError):
    def __init__(self, estimate, interval):
        self.estimate = estimate
        self.interval = interval
        lo, hi = interval
        super().__init__(
            f"spatial coefficient {estimate:.8g} is on the boundary of ({lo:.8g}, {hi:.8g})"
        )


class IndeterminateError(NumericalError):
    def __init__(self, message, trace=()):
        self.trace = tuple(trace)
        super().__init__(message)
