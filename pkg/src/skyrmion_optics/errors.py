class SkyrmionError(ValueError):
    """Invalid input or a computation that cannot produce a meaningful result."""


class CoverageError(SkyrmionError):
    def __init__(self, coverage: float, radius: float):
        self.coverage = coverage
        self.radius = radius
        super().__init__(f"only {coverage:.1%} of the disk of radius {radius:.4g} is valid (need 90%)")


class MeasurementError(SkyrmionError):
    """Problem with a measurement file; ``name`` identifies the offending image or file."""

    def __init__(self, name: str, message: str):
        self.name = name
        super().__init__(f"{name}: {message}")


class StageError(SkyrmionError):
    """Failure inside one stage of the analysis pipeline."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")
