from __future__ import annotations

from enum import Enum
from typing import NamedTuple, Union

# layers per handle code; streams longer than this are rejected
LAYER_BITS = 20
MAX_LAYERS = 1 << LAYER_BITS


class ElementHandle(NamedTuple):
    """Identifier of a k-simplex in a spacetime mesh.

    ``anchor`` is the spatial corner of the owning cube for regular meshes and
    the id of the owning base simplex for extruded meshes. Handles compare
    lexicographically on ``(k, anchor, type, layer)``.
    """

    k: int
    anchor: Union[tuple, int]
    type: int
    layer: int


class Kind(str, Enum):
    ORDINAL = "ordinal"
    INTERVAL = "interval"
    ALL = "all"

    @classmethod
    def parse(cls, kind):
        return kind if isinstance(kind, cls) else cls(kind)

    def includes(self, ordinal):
        if self is Kind.ALL:
            return True
        return ordinal == (self is Kind.ORDINAL)


class InvalidHandle(ValueError):
    pass
