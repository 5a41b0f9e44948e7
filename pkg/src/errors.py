"""Exception hierarchy shared by the library and the CLI."""


class RobustLearnError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(RobustLearnError, ValueError):
    """Two objects that must live on the same cube do not."""

    def __init__(self, expected: int, actual: int, what: str = "point"):
        super().__init__(f"dimension mismatch for {what}: expected {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


class InvalidParameterError(RobustLearnError, ValueError):
    pass


class NotEnumerableError(RobustLearnError, ValueError):
    pass


class ZeroMassError(RobustLearnError, ValueError):
    pass


class TrivialPairError(RobustLearnError, ValueError):
    pass


class ConfigError(RobustLearnError, ValueError):
    pass


class ScenarioConstraintError(RobustLearnError, ValueError):
    """A scenario's parameters violate one or more of its preconditions."""

    def __init__(self, scenario: str, failed: list):
        self.scenario = scenario
        self.failed = list(failed)
        super().__init__(f"scenario '{scenario}' constraints violated: " + "; ".join(self.failed))


class IntractableError(RobustLearnError, RuntimeError):
    """Brute-force enumeration was refused because the ball is too large."""

    def __init__(self, ball_points: int, limit: int):
        super().__init__(
            f"intractable: ball has {ball_points} points, limit is {limit} and no fast path applies"
        )
        self.ball_points = ball_points
        self.limit = limit


class AdversaryError(RobustLearnError, AssertionError):
    """A returned witness failed its own certificate check."""
