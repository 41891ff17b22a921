"""Exception hierarchy shared by every module."""


class LotteryError(Exception):
    """Base class for all errors raised by lotterynet."""

    kind = "error"


class InvalidArgument(LotteryError, ValueError):
    kind = "invalid-argument"


class OutOfRange(LotteryError, IndexError):
    kind = "out-of-range"


class ResourceLimit(LotteryError):
    """An exhaustive analyzer was asked to enumerate more than its guard allows."""

    kind = "resource-limit"


class DuplicateMessage(LotteryError):
    kind = "duplicate-message"


class InsufficientEscrow(LotteryError):
    kind = "insufficient-escrow"


class PhaseError(LotteryError):
    kind = "phase"


class VerificationError(LotteryError):
    kind = "verification"


class DoubleSpend(LotteryError):
    kind = "double-spend"


class ProofError(LotteryError):
    kind = "proof"
