"""Exception types shared across the package."""

from __future__ import annotations


class RonpaintError(Exception):
    """Base class for errors raised on invalid input or unusable data."""


class ParseError(RonpaintError):
    """A SMILES or pattern string could not be parsed.

    Attributes:
        message: What went wrong.
        text: The input string being parsed.
        offset: Byte offset into ``text`` where the problem was detected.
    """

    def __init__(self, message: str, text: str, offset: int) -> None:
        super().__init__(message)
        self.message = message
        self.text = text
        self.offset = offset

    def __str__(self) -> str:
        return f"{self.message} (offset {self.offset} in {self.text!r})"


class InputError(RonpaintError):
    """User-supplied data (files, rows, flags, mismatched artifacts) is invalid."""
