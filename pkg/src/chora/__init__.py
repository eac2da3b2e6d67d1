"""Tangle-diagram calculus for emergent algebras, with numerical checks."""
from .scale import ScaleExpr, parse_scale
from .terms import equal_modulo, normalize, parse_term
from .models import get_model

__all__ = ["ScaleExpr", "parse_scale", "parse_term", "normalize", "equal_modulo", "get_model"]
__version__ = "0.1.0"
