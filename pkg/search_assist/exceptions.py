"""
Exception hierarchy for the search assistance engine
"""
from typing import List, Optional


class SearchAssistError(Exception):
    """Base class for all engine errors"""


class EmptyQuery(SearchAssistError, ValueError):
    """Raised when a raw query normalizes to nothing"""


class ConfigError(SearchAssistError):
    """Raised when an engine configuration violates one or more invariants"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ParseError(SearchAssistError):
    """A malformed hose record"""

    def __init__(self, line_no: int, field: str, message: str):
        self.line_no = line_no
        self.field = field
        self.message = message
        super().__init__(f"line {line_no}: field '{field}': {message}")


class OutOfOrderInput(SearchAssistError):
    """An input stream went backwards in event time beyond the tolerance"""

    def __init__(self, stream: str, ts: int, previous_ts: int):
        self.stream = stream
        self.ts = ts
        self.previous_ts = previous_ts
        super().__init__(f"{stream} stream out of order: ts={ts} after ts={previous_ts}")


class SelfPair(SearchAssistError, ValueError):
    """A cooccurrence between a query and itself"""


class AssociationError(SearchAssistError):
    """Base class for contingency table / metric failures"""


class InsufficientSupport(AssociationError):
    """Pair weight below the minimum support"""


class ZeroSupport(AssociationError):
    """Division guard: the conditioning margin is empty"""


class Undefined(AssociationError):
    """Metric is undefined for the table (a zero margin)"""


class SigilMismatch(SearchAssistError, ValueError):
    """Edit distance requested between queries of different sigil classes"""


class SnapshotWriteError(SearchAssistError):
    """Snapshot could not be published; the previous manifest is untouched"""


class SnapshotLoadError(SearchAssistError):
    """Snapshot or manifest could not be read or failed validation"""


class KMismatch(SearchAssistError, ValueError):
    """Churn requested between top-k lists of different k"""


class ScenarioError(SearchAssistError):
    """Invalid synthetic scenario"""

    def __init__(self, errors: List[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InvalidRequest(SearchAssistError):
    """Malformed serving request"""

    def __init__(self, message: str, details: Optional[dict] = None):
        self.message = message
        self.details = details
        super().__init__(message)
