"""Exception hierarchy for the pmatic package.

Every error raised on purpose derives from PmaticError so callers (and the
CLI exit-code mapping) can distinguish "the input/config is wrong"
(ValidationError), "the compressed data cannot be decoded" (DecodeError) and
"the external predictor process misbehaved" (BridgeError).
"""

__all__ = [
    "PmaticError",
    "ValidationError",
    "DecodeError",
    "BridgeError",
    "DomainError",
    "NotReciprocalEvenInteger",
    "RadiusTooSmall",
    "HelperProbOutOfRange",
    "DenominatorCapExceeded",
    "NoRoot",
    "AlphabetTooLarge",
    "AlphabetTooSmall",
    "UnknownToken",
    "EmptyPrefixSet",
    "InputExhausted",
    "InternalInconsistency",
    "UnknownCodeword",
    "TokenOutOfRange",
    "BadMagic",
    "UnsupportedVersion",
    "VocabMismatch",
    "ProtocolError",
    "BridgeTimeout",
]


class PmaticError(Exception):
    """Base class for all deliberate pmatic errors."""


class ValidationError(PmaticError):
    """Bad parameters, bad header, or bad input data (CLI exit code 2)."""


class DecodeError(PmaticError):
    """The payload cannot be decoded to the original tokens (CLI exit code 3)."""


class BridgeError(PmaticError):
    """External predictor process failure (CLI exit code 4)."""


# --- parameter / analysis errors -------------------------------------------

class DomainError(ValidationError):
    """Argument outside the mathematical domain of the function."""


class NotReciprocalEvenInteger(ValidationError):
    """Bin radius r must satisfy 1/(2r) = integer m >= 1."""


class RadiusTooSmall(ValidationError):
    """Bin radius must exceed twice the mismatch tolerance (r > 2*delta)."""


class HelperProbOutOfRange(ValidationError):
    """Helper-bit probability delta/r must lie in (0, 1/2)."""


class DenominatorCapExceeded(ValidationError):
    """A coded probability's denominator would exceed the coder cap 2**24."""


class NoRoot(ValidationError):
    """The balance equation has no sign change on the search interval."""


# --- probability-model errors -----------------------------------------------

class AlphabetTooLarge(ValidationError):
    """Brute-force subset enumeration is capped at 20 symbols."""


# --- codebook errors ---------------------------------------------------------

class AlphabetTooSmall(ValidationError):
    """Codebooks need at least two tokens."""


class UnknownToken(ValidationError):
    """Token id outside [0, alphabet_size)."""


class EmptyPrefixSet(PmaticError):
    """No token's codeword extends the given bit prefix."""


# --- coder / codec errors ----------------------------------------------------

class InputExhausted(DecodeError):
    """The coder ran out of payload bytes mid-decode (truncation/corruption)."""


class InternalInconsistency(PmaticError):
    """A case analysis that should be exhaustive was not; indicates a bug."""


class UnknownCodeword(DecodeError):
    """Decoded bits map to no token (mismatch beyond tolerance, or corruption)."""


# --- container errors ----------------------------------------------------------

class TokenOutOfRange(ValidationError):
    """Input token id does not fit the configured alphabet."""


class BadMagic(ValidationError):
    """Input is not a pmatic container."""


class UnsupportedVersion(ValidationError):
    """Container format version not handled by this build."""


# --- bridge client errors -----------------------------------------------------

class VocabMismatch(BridgeError):
    """External predictor handshake vocab differs from the codebook alphabet."""


class ProtocolError(BridgeError):
    """Malformed or out-of-contract reply from the external predictor."""


class BridgeTimeout(BridgeError):
    """External predictor did not answer within the deadline."""
