"""Exception types shared across the package."""


class MumonoidsError(Exception):
    """Base class for every error raised by this package."""


class PatternError(MumonoidsError):
    """A pattern is structurally invalid, e.g. it binds the same variable twice."""


class MalformedTermError(MumonoidsError):
    """Evaluation met a value that typechecking should have ruled out."""


class MatchFailureError(MumonoidsError):
    """No case of a function matched the argument it was applied to."""


class BuiltinError(MumonoidsError):
    """A builtin was applied to values outside its domain."""


class TypeCheckError(MumonoidsError):
    """A term does not typecheck. ``rule`` names the violated typing rule."""

    def __init__(self, message: str, rule: str | None = None):
        self.rule = rule
        super().__init__(f"[{rule}] {message}" if rule else message)


class IncompatibleTypesError(TypeCheckError):
    """Two types cannot be combined into one."""


class ParseError(MumonoidsError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class IterationLimitError(MumonoidsError):
    """A fixpoint failed to stabilize within the iteration budget."""

    def __init__(self, iterations: int):
        self.iterations = iterations
        super().__init__(f"no fixpoint after {iterations} iterations")


class CardinalityLimitError(MumonoidsError):
    """An intermediate bag grew past the configured cardinality cap."""

    def __init__(self, size: int, limit: int):
        self.size = size
        self.limit = limit
        super().__init__(f"bag of {size} elements exceeds the cap of {limit}")


class PlanError(MumonoidsError):
    """An execution plan was invoked with its preconditions unmet."""


class InternalSoundnessError(MumonoidsError):
    """An optimizer guarantee was violated at run time. Always a bug."""


class DataError(MumonoidsError):
    """A data file or dataset declaration could not be used."""


class ProbeError(MumonoidsError):
    """A randomized check could not even be run on the given shapes."""
