"""Exception hierarchy shared across the package."""


class JerkromError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(JerkromError):
    """Invalid configuration value. Carries the offending key when known."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ShapeError(JerkromError):
    """Array shape or dimension inconsistent with the declared contract."""


class CorruptDataError(JerkromError):
    """On-disk container does not match its manifest."""


class VersionError(JerkromError):
    """On-disk container written by an incompatible format version."""


class CheckpointMismatchError(JerkromError):
    """Checkpoint architecture does not match the requested model."""


class SolverBlowupError(JerkromError):
    """PDE solver produced non-finite values."""

    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class IntegratorBlowupError(JerkromError):
    """Latent ODE integration produced non-finite values."""

    def __init__(self, message, last_finite_time=None):
        super().__init__(message)
        self.last_finite_time = last_finite_time


class TrainingDivergedError(JerkromError):
    """Training loss became non-finite. Carries last finite diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class MetricUndefinedError(JerkromError):
    """Requested metric is undefined for the given inputs (e.g. zero norm)."""


class MissingArtifactError(JerkromError):
    """Required run artifacts are absent. Carries the list of missing paths."""

    def __init__(self, missing):
        super().__init__("missing required artifacts: " + ", ".join(str(m) for m in missing))
        self.missing = list(missing)
