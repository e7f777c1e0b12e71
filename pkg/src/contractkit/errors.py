"""Error type shared by every module.

Each failure carries a short machine-readable ``code`` so that callers
(including the CLI) can map it to an exit status without string matching.
"""

from __future__ import annotations

ALPHABET_MISMATCH = "ALPHABET_MISMATCH"
NOT_STRICTLY_POSITIVE = "NOT_STRICTLY_POSITIVE"
DERIVATIVE_UNAVAILABLE = "DERIVATIVE_UNAVAILABLE"
DOMAIN = "DOMAIN"
VALIDATION = "VALIDATION_ERROR"
PARSE = "PARSE_ERROR"
NON_CONVERGED = "NON_CONVERGED"
UNSUPPORTED_PHI = "UNSUPPORTED_PHI"
DISCONNECTED = "DISCONNECTED"
NO_FACTORIZATION_FOUND = "NO_FACTORIZATION_FOUND"
NOT_PSD = "NOT_PSD"
BRIDGE_VIOLATION = "BRIDGE_VIOLATION"
SIZE_LIMIT = "SIZE_LIMIT"
OVERLAPPING_SETS = "OVERLAPPING_SETS"


class ContractError(Exception):
    """Raised for any validation or numerical failure.

    Parameters
    ----------
    code : str
        One of the module-level code constants.
    message : str
        Human-readable explanation.
    index : int or None
        Offending index, when the failure is tied to one entry.
    """

    def __init__(self, code: str, message: str, index: int | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.index = index
