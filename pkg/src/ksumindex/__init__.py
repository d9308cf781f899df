"""Sub-quadratic space, sub-linear time kSUM-Indexing via function inversion."""

from .hashing import PairwiseHash
from .index import (BuildStats, FormatErrorCode, IndexFormatError, KSumIndex, QueryResult,
                    deserialize, preprocess)
from .inverter import InversionParams, Inverter, Mode, derive_params
from .sumfn import Instance, decode, encode, enumerate_sumset, eval_f, eval_g, oracle_query
from .universe import P

__all__ = [
    "BuildStats", "FormatErrorCode", "IndexFormatError", "Instance", "InversionParams",
    "Inverter", "KSumIndex", "Mode", "P", "PairwiseHash", "QueryResult", "decode",
    "derive_params", "deserialize", "encode", "enumerate_sumset", "eval_f", "eval_g",
    "oracle_query", "preprocess",
]
