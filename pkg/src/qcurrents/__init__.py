"""Exact vertex-operator engine for the Drinfeld currents of U_q(sl2-hat) and their parafermions."""

__version__ = "0.1.0"

from .report import RelationReport  # noqa: E402
from .scalar import ExactField, FieldParams, NumericField, qint, qpow  # noqa: E402
from .vertexcalc import FFVO, ScalarSeries, ZeroOperator, contract  # noqa: E402

__all__ = ["FFVO", "ExactField", "FieldParams", "NumericField", "RelationReport",
           "ScalarSeries", "ZeroOperator", "__version__", "contract", "qint", "qpow"]
