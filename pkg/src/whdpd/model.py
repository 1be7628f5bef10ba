"""Generalized Wiener-Hammerstein cascade: blocks, forward pass, complexity.

A model is an ordered list of FIR blocks and memoryless polynomial blocks.
The canonical configuration is LNL: FirBlock(K1), PolyNlBlock({3: a}),
FirBlock(K2). FIR convolution is same-length with zero padding and the
center tap at index K//2, so a unit-impulse filter with odd K is exactly
the identity.
"""

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dsp import SampledSignal

SCHEMA_VERSION = "whdpd-1"


@dataclass
class FirBlock:
    """Real FIR filter; the linear frequency-response compensation block."""

    taps: np.ndarray

    def __post_init__(self):
        self.taps = np.asarray(self.taps, dtype=np.float64)
        if self.taps.size < 1:
            raise ValueError("FIR block needs at least one tap")
        if not np.all(np.isfinite(self.taps)):
            raise ValueError("FIR taps must be finite")

    @classmethod
    def identity(cls, n_taps):
        """Unit-impulse filter (the standard initial value)."""
        taps = np.zeros(n_taps)
        taps[n_taps // 2] = 1.0
        return cls(taps)


@dataclass
class PolyNlBlock:
    """Memoryless polynomial f(x) = x + sum_m a_m x^m, orders m >= 2.

    The linear term is implicitly 1; coeffs is sparse so the canonical
    cubic-only block {3: a} and a full polynomial share one type.
    """

    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for m, a in self.coeffs.items():
            m = int(m)
            if m < 2:
                raise ValueError("polynomial orders must be >= 2")
            if not np.isfinite(a):
                raise ValueError("polynomial coefficients must be finite")
            clean[m] = float(a)
        self.coeffs = clean

    def orders(self):
        return np.array(sorted(self.coeffs), dtype=np.int64)

    def values(self):
        return np.array([self.coeffs[m] for m in sorted(self.coeffs)])

    @classmethod
    def cubic(cls, a=0.0):
        return cls({3: a})


@dataclass
class WhModel:
    """Ordered cascade of FirBlock / PolyNlBlock layers."""

    layers: list

    def __post_init__(self):
        if len(self.layers) == 0:
            raise ValueError("model needs at least one block")

    @classmethod
    def lnl(cls, k1, k2, a=0.0):
        """Canonical LNL model at the standard initialization
        (unit-impulse filters, a as given, default 0)."""
        return cls([FirBlock.identity(k1), PolyNlBlock.cubic(a),
                    FirBlock.identity(k2)])

    def copy(self):
        return copy.deepcopy(self)


@dataclass
class ComplexityReport:
    multiplications_per_sample: int
    additions_per_sample: int


def fir_apply(block, x):
    """Same-length zero-padded convolution of a signal with the block taps."""
    return x.with_samples(kernels.fir_same(x.samples, block.taps))


def nl_apply(block, y):
    """Elementwise x + sum a_m x^m; memoryless."""
    if not block.coeffs:
        return y.with_samples(y.samples.copy())
    return y.with_samples(
        kernels.poly_apply(y.samples, block.orders(), block.values()))


def wh_forward(model, x):
    """Run the cascade; returns (output, per-layer intermediate arrays).

    The intermediates list holds each layer's input array (x^(l) for FIR
    blocks, y^(l) for nonlinear blocks) followed by the final output; it is
    consumed by the backward pass.
    """
    intermediates = []
    cur = x
    for block in model.layers:
        intermediates.append(cur.samples)
        if isinstance(block, FirBlock):
            cur = fir_apply(block, cur)
        elif isinstance(block, PolyNlBlock):
            cur = nl_apply(block, cur)
        else:
            raise TypeError(f"unknown block type {type(block).__name__}")
    intermediates.append(cur.samples)
    return cur, intermediates


def complexity(model):
    """Per-sample multiply/add counts.

    FIR with K taps: K mults, K-1 adds. A polynomial counts only its present
    terms: order m costs m mults, and each term costs one add onto x
    (cubic-only: 3 mults, 1 add; a full M-th order polynomial recovers
    M(M+1)/2 - 1 mults and M - 1 adds).
    """
    mults = 0
    adds = 0
    for block in model.layers:
        if isinstance(block, FirBlock):
            k = block.taps.size
            mults += k
            adds += k - 1
        else:
            for m in block.coeffs:
                mults += m
                adds += 1
    return ComplexityReport(mults, adds)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def model_to_dict(model):
    layers = []
    for block in model.layers:
        if isinstance(block, FirBlock):
            layers.append({"kind": "fir", "taps": block.taps.tolist()})
        else:
            layers.append({"kind": "poly",
                           "coeffs": {str(m): a for m, a in block.coeffs.items()}})
    return {"schema_version": SCHEMA_VERSION, "layers": layers}


def model_from_dict(doc):
    layers = []
    for entry in doc["layers"]:
        if entry["kind"] == "fir":
            layers.append(FirBlock(np.asarray(entry["taps"])))
        elif entry["kind"] == "poly":
            layers.append(PolyNlBlock({int(m): float(a)
                                       for m, a in entry["coeffs"].items()}))
        else:
            raise ValueError(f"unknown block kind {entry['kind']!r}")
    return WhModel(layers)


def save_model(model, path):
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2)


def load_model(path):
    with open(path) as f:
        return model_from_dict(json.load(f))
