"""Exceptions shared across modules."""
from __future__ import annotations


class ChoraError(Exception):
    """Base class for errors raised by this package."""


class SiteMismatch(ChoraError, ValueError):
    """A rewrite site does not match the move's schema."""


class ScaleMismatch(ChoraError, ValueError):
    """Crossing scales do not cancel or compose as the move requires."""


class WouldOrphanDecoration(ChoraError, ValueError):
    """A rewrite would delete a decorated wire."""


class HypothesisViolated(ChoraError, ValueError):
    """The diagram is not a nested-choroi diagram as the normalizer requires."""


class UndecoratedCycle(ChoraError, ValueError):
    """A dataflow cycle is not cut by a decorated closed arc."""


class UnboundInput(ChoraError, KeyError):
    def __str__(self):
        return f"no value bound for input {self.args[0]!r}"


class DivergenceDetected(ChoraError, ArithmeticError):
    """A scan's successive differences kept growing."""


class MissingLimit(ChoraError, ValueError):
    """A limit object needed by a construction is not available."""


class DensityViolated(ChoraError, ValueError):
    """A relation's domain or image is not dense enough to generalize."""


class SizeLimit(ChoraError, ValueError):
    """Exact enumeration requested beyond the supported size."""
