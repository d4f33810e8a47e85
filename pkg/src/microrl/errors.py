"""Exception hierarchy. CLI exit codes hang off ``exit_code``."""


class MicroRLError(Exception):
    exit_code = 1


class ConfigError(MicroRLError, ValueError):
    """Invalid scenario, plan or trainer configuration."""

    exit_code = 2


class ProtocolError(MicroRLError, RuntimeError):
    """API misuse: acting for dead units, stepping a finished episode."""


class DomainError(MicroRLError, ValueError):
    pass


class ShapeError(MicroRLError, ValueError):
    pass


class NumericDivergenceError(MicroRLError, FloatingPointError):
    exit_code = 3

    def __init__(self, message, episode=None, tick=None):
        super().__init__(message)
        self.episode = episode
        self.tick = tick


class TransferError(MicroRLError):
    exit_code = 4


class CheckpointError(MicroRLError):
    exit_code = 5
