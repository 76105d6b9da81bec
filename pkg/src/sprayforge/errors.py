"""Exception hierarchy shared by the parser, the geometry kernels and the CLI."""
from __future__ import annotations


class SprayforgeError(Exception):
    """Base class for every error raised by the package."""


class ParseError(SprayforgeError):
    """Malformed expression text. ``offset`` is the byte offset of the bad token."""

    def __init__(self, message: str, offset: int, text: str = ""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")


class UnknownVariable(ParseError):
    def __init__(self, name: str, offset: int, text: str = ""):
        self.name = name
        super().__init__(f"unknown variable '{name}'", offset, text)


class NonIntegerExponent(ParseError):
    pass


class ConfigError(SprayforgeError):
    """Invalid configuration file or preset request (CLI exit code 2)."""


class UnboundParameter(ConfigError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound parameter '{name}'")


class NumericalError(SprayforgeError):
    """Base for failures of the numerical kernels (CLI exit code 3)."""


class DomainViolation(NumericalError):
    def __init__(self, subexpr: str, reason: str):
        self.subexpr = subexpr
        super().__init__(f"domain violation in '{subexpr}': {reason}")


class OrderOverflow(NumericalError):
    def __init__(self, requested: int, limit: int = 4):
        self.requested = requested
        super().__init__(f"jet order {requested} exceeds the maximum {limit}")


class SingularMatrix(NumericalError):
    pass


class IrregularPoint(NumericalError):
    """Fundamental tensor degenerate at the evaluation point."""


class NullSection(NumericalError):
    """Finsler / Cartan quantities requested at (or too near) y = 0 or p = 0."""


class ConvergenceError(NumericalError):
    pass
