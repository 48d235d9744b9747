"""Exception hierarchy. CLI exit codes hang off these classes."""


class UavBeamError(Exception):
    exit_code = 3


class DimensionError(UavBeamError, ValueError):
    exit_code = 3


class DomainError(UavBeamError, ValueError):
    exit_code = 3


class DegenerateGeometryError(UavBeamError, ValueError):
    exit_code = 3


class ConfigError(UavBeamError, ValueError):
    exit_code = 2


class SchemaError(ConfigError):
    pass


class TrainingDivergenceError(UavBeamError, RuntimeError):
    def __init__(self, epoch: int, message: str = "non-finite loss"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch
