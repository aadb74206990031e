"""Numpy array support for pydantic models and Kronecker vectorization helpers."""

import numpy
from pydantic_core import core_schema
from typing_extensions import Annotated


def freeze(value):
    """Return a read-only float copy of ``value``"""
    arr = numpy.array(value, dtype=float)
    arr.setflags(write=False)
    return arr


def _to_array(value):
    try:
        return freeze(value)
    except (TypeError, ValueError) as e:
        raise ValueError(f"Not a numeric array: {e}")


class _ArrayAnnotation:
    @classmethod
    def __get_pydantic_core_schema__(cls, source, handler):
        from_value_schema = core_schema.no_info_plain_validator_function(_to_array)

        return core_schema.json_or_python_schema(
            json_schema=from_value_schema,
            python_schema=from_value_schema,
            serialization=core_schema.plain_serializer_function_ser_schema(
                lambda x: x.tolist()
            ),
        )

    @classmethod
    def __get_pydantic_json_schema__(cls, schema, handler):
        return {"type": "array", "items": {}}


Array = Annotated[numpy.ndarray, _ArrayAnnotation]


def vec(matrix):
    """Stack the columns of ``matrix`` into one vector.

    For an N x M target matrix T this gives t = vec(T), whose covariance under
    the graph model is B^2 (x) K: node m occupies the block m*N:(m+1)*N.
    """
    return numpy.asarray(matrix).reshape(-1, order="F")


def unvec(vector, rows):
    """Inverse of :func:`vec` for a matrix with ``rows`` rows"""
    return numpy.asarray(vector).reshape(rows, -1, order="F")
