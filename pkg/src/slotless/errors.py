"""Exception hierarchy shared by all modules."""


class SlotlessError(ValueError):
    """Base class for every domain error raised by this package."""


class InvalidConfig(SlotlessError):
    pass


class OrderViolation(SlotlessError):
    """The configuration is outside the process order a formula covers."""


class WrongDirection(SlotlessError):
    """An order-1 formula was applied to the opposite neighbourhood type."""


class InfeasibleEta(SlotlessError):
    """Target duty-cycle exceeds what a variant can realize."""

    def __init__(self, message: str, limit: float | None = None, formula: str | None = None):
        super().__init__(message)
        self.limit = limit
        self.formula = formula


class RangesEmpty(SlotlessError):
    """No integer parameter satisfies all constraints at once."""


class GuardExceedsWindow(SlotlessError):
    pass


class UnsupportedProtocol(SlotlessError):
    pass


class EtaOutOfRange(SlotlessError):
    pass


class SlotTooShort(SlotlessError):
    pass


class InvalidOffset(SlotlessError):
    pass


class StepTooCoarse(SlotlessError):
    pass


class SweepTimeout(SlotlessError):
    """Some initial offset is never discovered within the sweep horizon."""
