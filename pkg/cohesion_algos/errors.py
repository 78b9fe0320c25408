from typing import Optional, Sequence


class CohesionError(Exception):
    """Base class of every documented failure raised by cohesion_algos."""


class DimensionError(CohesionError, ValueError):
    def __init__(self, message: str, *shapes: Sequence[int]):
        if shapes:
            message = f"{message} (shapes: {', '.join(str(tuple(s)) for s in shapes)})"
        super().__init__(message)
        self.shapes = tuple(tuple(s) for s in shapes)


class ConfigurationError(CohesionError, ValueError):
    pass


class ContractError(CohesionError, RuntimeError):
    pass


class NumericalError(CohesionError, FloatingPointError):
    pass


class EmotionIndexError(CohesionError, IndexError):
    pass


class NoFacesError(CohesionError):
    def __init__(self, sample_id: Optional[str] = None):
        where = f" in sample {sample_id!r}" if sample_id is not None else ""
        super().__init__(f"no faces{where}; the face-level pipeline needs at least one face")
        self.sample_id = sample_id


class MissingMaskError(CohesionError):
    def __init__(self, sample_id: Optional[str] = None):
        super().__init__(f"sample {sample_id!r} carries no person mask")
        self.sample_id = sample_id


class UndefinedKappaError(CohesionError, ZeroDivisionError):
    pass


class DivergenceError(CohesionError):
    def __init__(self, epoch: int, batch: int, detail: str = "loss is not finite"):
        super().__init__(f"training diverged at epoch {epoch}, batch {batch}: {detail}")
        self.epoch = epoch
        self.batch = batch


class SchemaError(CohesionError, ValueError):
    def __init__(self, message: str, record: Optional[int] = None, field: Optional[str] = None):
        location = []
        if record is not None:
            location.append(f"record {record}")
        if field is not None:
            location.append(f"field {field!r}")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)
        self.record = record
        self.field = field


class ImageNotFoundError(CohesionError, FileNotFoundError):
    pass


class ArchitectureMismatchError(CohesionError):
    pass


class CheckpointFormatError(CohesionError, ValueError):
    pass


class EmptyDatasetError(CohesionError, ValueError):
    pass
