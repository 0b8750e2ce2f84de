from .polynomial import PolyRing, Polynomial, PolynomialSyntaxError
from .orders import MonomialOrder
from .rings import (Ideal, LinearSystem, RingMap, RingPresentation, buchberger, eliminate,
                    normal_form, quotient, saturate, syzygies)

__all__ = [
    "PolyRing", "Polynomial", "PolynomialSyntaxError", "MonomialOrder", "Ideal",
    "LinearSystem", "RingMap", "RingPresentation", "buchberger", "eliminate",
    "normal_form", "quotient", "saturate", "syzygies",
]
