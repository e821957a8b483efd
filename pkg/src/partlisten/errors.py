class PartListenError(Exception):
    """Base class for errors raised by partlisten."""


class InvalidInputError(PartListenError, ValueError):
    """An operation was called with arguments that violate its preconditions."""


class InvalidConfigError(InvalidInputError):
    pass


class DegenerateGeometryError(PartListenError):
    pass


class BundleFormatError(PartListenError):
    """A dataset bundle file is malformed. Carries the byte offset of the problem."""

    def __init__(self, message, path=None, offset=None):
        self.path = str(path) if path is not None else None
        self.offset = offset

        location = ""
        if self.path is not None:
            location = f" in {self.path}"
        if offset is not None:
            location += f" at byte {offset}"

        super().__init__(f"{message}{location}")


class TrainingDivergedError(PartListenError):
    def __init__(self, message, checkpoint=None):
        self.checkpoint = checkpoint
        super().__init__(message)
