"""Exception types raised across the simulator."""


class UnisonError(Exception):
    """Base class for every simulator error."""


class SizeTooSmall(UnisonError, ValueError):
    pass


class IndexOutOfRange(UnisonError, IndexError):
    pass


class RoleMismatch(UnisonError):
    """Rule queries were made for a processor that is not correct."""


class GuardViolation(UnisonError):
    """A rule was applied in a configuration where its guard is false."""


class ClockOverflow(UnisonError, OverflowError):
    pass


class TooManyFaults(UnisonError, ValueError):
    pass


class Deadlock(UnisonError):
    """No correct rule is enabled and no faulty processor can act."""


class ScriptViolation(UnisonError):
    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class TraceMissingEnabledSets(UnisonError):
    pass


class NoCycleDetected(UnisonError):
    pass


class InvariantViolation(UnisonError):
    """A checked property failed; carries the property name and first offending step."""

    def __init__(self, prop, step, detail=""):
        msg = f"{prop} violated at step {step}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.prop = prop
        self.step = step
        self.detail = detail


class UsageError(UnisonError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))
