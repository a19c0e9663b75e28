"""Exception hierarchy shared by all modules."""


class HierdagError(Exception):
    """Base class for every error raised by this package."""


class DuplicateName(HierdagError):
    pass


class UnknownName(HierdagError):
    pass


class SelfLoop(HierdagError):
    pass


class CycleDetected(HierdagError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("cycle detected: " + " -> ".join(self.cycle))


class ParseError(HierdagError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class LengthMismatch(HierdagError):
    pass


class IndexOutOfRange(HierdagError):
    pass


class EmptyCandidateSet(HierdagError):
    pass


class ShapeMismatch(HierdagError):
    pass


class LabelNotInHierarchy(HierdagError):
    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class DimensionMismatch(HierdagError):
    def __init__(self, message, row=None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class EmptyDataset(HierdagError):
    pass


class InvalidConfig(HierdagError):
    pass


class GridMismatch(HierdagError):
    pass
