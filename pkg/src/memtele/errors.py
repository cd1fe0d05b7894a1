"""Exception hierarchy shared by all simulator modules."""


class SimulationError(Exception):
    """Base class for every error raised by memtele."""


class UnknownMode(SimulationError, KeyError):
    pass


class TruncationOverflow(SimulationError):
    """A linear-optical transform would put more than ``n_max`` photons in a mode."""


class NotTwoQubit(SimulationError):
    pass


class ParamOutOfRange(SimulationError, ValueError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class MissingSpinModes(SimulationError):
    pass


class MissingStokesModes(SimulationError):
    pass


class NoResultOutcome(SimulationError):
    pass


class NoHeraldedTrials(SimulationError):
    pass


class EmptyGrid(SimulationError, ValueError):
    pass


class ConfigError(SimulationError):
    """Base for configuration problems; the CLI maps these to exit code 2."""


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class InvariantViolation(ConfigError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
