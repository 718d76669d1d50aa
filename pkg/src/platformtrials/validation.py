"""Input validation helpers shared across the package.

Validation failures raise :class:`ValidationError` whose message names every
offending argument, one line per argument, so callers (and the CLI) can report
actionable errors instead of tracebacks deep inside the numerics.
"""

from __future__ import annotations

from collections.abc import Sequence


class ValidationError(ValueError):
    """Invalid user input; ``errors`` maps argument name -> problem."""

    def __init__(self, errors: dict[str, str]):
        self.errors = dict(errors)
        lines = [f"{name}: {problem}" for name, problem in self.errors.items()]
        super().__init__("invalid input\n  " + "\n  ".join(lines))


class Checker:
    """Accumulates per-argument problems and raises them in one go."""

    def __init__(self) -> None:
        self.errors: dict[str, str] = {}

    def fail(self, name: str, problem: str) -> None:
        # keep the first problem reported for an argument
        self.errors.setdefault(name, problem)

    def require(self, condition: bool, name: str, problem: str) -> bool:
        if not condition:
            self.fail(name, problem)
        return condition

    def positive_int(self, value, name: str) -> bool:
        ok = isinstance(value, int) and not isinstance(value, bool) and value > 0
        return self.require(ok, name, f"must be a positive integer, got {value!r}")

    def positive_real(self, value, name: str) -> bool:
        ok = isinstance(value, (int, float)) and not isinstance(value, bool) and value > 0
        return self.require(ok, name, f"must be a positive number, got {value!r}")

    def real_sequence(self, value, name: str, length: int | None = None) -> bool:
        if not isinstance(value, Sequence) or isinstance(value, (str, bytes)):
            return self.require(False, name, f"must be a sequence of numbers, got {value!r}")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return self.require(False, name, "must contain only numbers")
        if length is not None and len(value) != length:
            return self.require(False, name, f"must have length {length}, got {len(value)}")
        return True

    def raise_if_failed(self) -> None:
        if self.errors:
            raise ValidationError(self.errors)
