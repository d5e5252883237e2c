"""Toolkit for embedding and recovering bit streams in generated text.

The per-step distribution of an autoregressive model is reshaped in two
dimensions (entropy-adaptive temperature and target-corpus frequency
alignment), quantized to exact integer weights, and sampled through one
of four stego codecs. Sender and receiver replay identical
computations, so recovery is exact whenever both ends share the key and
artifacts.
"""

from .codecs import Bits, DesyncError, KeyStream
from .corpus import (
    FreqTable,
    NGramModel,
    Vocabulary,
    count_frequencies,
    detokenize,
    merge_frequencies,
    tokenize,
    train_ngram,
)
from .lm import BridgeProvider, ContextState, NGramProvider, softmax, truncate
from .pipeline import (
    DecodeResult,
    EncodeResult,
    GenerationRecord,
    StegoSession,
    decode_message,
    encode_message,
    generate_random,
)
from .quantize import QuantDist, cumulative, quantize
from .reformer import (
    ReformConfig,
    ReformContext,
    instantaneous_entropy,
    reform_step,
    sequential_reform,
    spatial_factor,
    spatial_reform,
    temperature,
)

__version__ = "0.1.0"

__all__ = [
    "Bits",
    "BridgeProvider",
    "ContextState",
    "DecodeResult",
    "DesyncError",
    "EncodeResult",
    "FreqTable",
    "GenerationRecord",
    "KeyStream",
    "NGramModel",
    "NGramProvider",
    "QuantDist",
    "ReformConfig",
    "ReformContext",
    "StegoSession",
    "Vocabulary",
    "count_frequencies",
    "cumulative",
    "decode_message",
    "detokenize",
    "encode_message",
    "generate_random",
    "instantaneous_entropy",
    "merge_frequencies",
    "quantize",
    "reform_step",
    "sequential_reform",
    "softmax",
    "spatial_factor",
    "spatial_reform",
    "temperature",
    "tokenize",
    "train_ngram",
    "truncate",
]
