"""Software stand-in for the hardware transmitter chain.

Processing order: DAC quantizer -> pre FIR -> saturating amplifier ->
post FIR -> optional MZM -> additive white Gaussian noise. Everything is
per real rail and deterministic for a fixed seed.

The "paper-like" preset is synthetic: the real lab responses are unknown,
so the FIRs are gentle low-pass stand-ins with a small echo, and the
amplifier is the arctan saturation model while the DPD nonlinearity stays
cubic, keeping the same model mismatch the lab experiment had.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import firwin

from .model import SCHEMA_VERSION, FirBlock
from .kernels import fir_same


@dataclass
class SaturationSpec:
    """Memoryless odd compression. saturation_level is the output asymptote
    (arctan/tanh) or the cubic scale; gain is the small-signal slope.

    kind 'cubic' is y = gain * (x - x^3 / (3*sat^2)), the third-order Taylor
    match of tanh saturation; it equals a cubic PolyNlBlock with
    a = -1/(3*sat^2), which makes WH-expressible channels easy to build.
    Only monotone for |x| < sat.
    """

    kind: str = "arctan"
    saturation_level: float = 1.0
    gain: float = 1.0

    def __post_init__(self):
        if self.kind not in ("arctan", "tanh", "cubic"):
            raise ValueError(f"unknown saturation kind {self.kind!r}")
        if self.saturation_level <= 0:
            raise ValueError("saturation_level must be > 0")


@dataclass
class MzmSpec:
    """Mach-Zehnder transfer sin(pi*v / (2*v_pi)) per rail."""

    v_pi: float = 1.0

    def __post_init__(self):
        if self.v_pi <= 0:
            raise ValueError("v_pi must be > 0")


@dataclass
class TxChannel:
    """Configurable transmitter chain."""

    dac_bits: int | None = None
    dac_full_scale: float = 1.0
    pre_fir: FirBlock = field(default_factory=lambda: FirBlock.identity(1))
    saturation: SaturationSpec = field(default_factory=SaturationSpec)
    post_fir: FirBlock = field(default_factory=lambda: FirBlock.identity(1))
    mzm: MzmSpec | None = None
    noise_snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.dac_bits is not None and not 1 <= self.dac_bits <= 16:
            raise ValueError("dac_bits must be in [1, 16]")


def quantize(x, bits, full_scale):
    """Uniform mid-rise quantization with hard clipping at +-full_scale."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if full_scale <= 0:
        raise ValueError("full_scale must be > 0")
    delta = 2.0 * full_scale / 2 ** bits
    idx = np.floor(x.samples / delta)
    idx = np.clip(idx, -(2 ** (bits - 1)), 2 ** (bits - 1) - 1)
    return x.with_samples((idx + 0.5) * delta)


def saturate(spec, x):
    """Elementwise monotone odd compression."""
    s = spec.saturation_level
    g = spec.gain
    v = x.samples
    if spec.kind == "arctan":
        y = (2.0 * s / np.pi) * np.arctan(np.pi * g * v / (2.0 * s))
    elif spec.kind == "tanh":
        y = s * np.tanh(g * v / s)
    else:  # cubic
        y = g * (v - v ** 3 / (3.0 * s * s))
    return x.with_samples(y)


def simulate_tx(channel, x):
    """Run one rail through the transmitter chain; deterministic per seed."""
    sig = x
    if channel.dac_bits is not None:
        sig = quantize(sig, channel.dac_bits, channel.dac_full_scale)
    sig = sig.with_samples(fir_same(sig.samples, channel.pre_fir.taps))
    sig = saturate(channel.saturation, sig)
    sig = sig.with_samples(fir_same(sig.samples, channel.post_fir.taps))
    if channel.mzm is not None:
        sig = sig.with_samples(
            np.sin(np.pi * sig.samples / (2.0 * channel.mzm.v_pi)))
    if channel.noise_snr_db is not None:
        rng = np.random.default_rng(channel.seed)
        p_sig = np.mean(sig.samples ** 2)
        p_noise = p_sig * 10.0 ** (-channel.noise_snr_db / 10.0)
        sig = sig.with_samples(
            sig.samples + rng.normal(0.0, np.sqrt(p_noise), sig.samples.size))
    return sig


def _lowpass(n_taps, cutoff, echo=0.0, echo_delay=0):
    """Gentle low-pass with an optional small echo tap, unit DC gain."""
    taps = firwin(n_taps, cutoff)
    if echo:
        taps[n_taps // 2 + echo_delay] += echo
    return FirBlock(taps / np.sum(taps))


def paper_like_preset(seed=0):
    """Synthetic desk-scale channel: 8-bit DAC, 15-tap low-pass FIRs with
    gentle ripple, arctan saturation, 35-dB noise."""
    return TxChannel(
        dac_bits=8,
        dac_full_scale=1.5,
        pre_fir=_lowpass(15, 0.85, echo=0.04, echo_delay=3),
        saturation=SaturationSpec("arctan", saturation_level=1.0, gain=1.0),
        post_fir=_lowpass(15, 0.75, echo=0.05, echo_delay=4),
        mzm=None,
        noise_snr_db=35.0,
        seed=seed)


def with_seed(channel, seed):
    return replace(channel, seed=seed)


# ---------------------------------------------------------------------------
# serialization (same JSON family as model files)
# ---------------------------------------------------------------------------

def channel_to_dict(channel):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "channel": {
            "dac_bits": channel.dac_bits,
            "dac_full_scale": channel.dac_full_scale,
            "pre_fir": {"taps": channel.pre_fir.taps.tolist()},
            "saturation": {
                "kind": channel.saturation.kind,
                "saturation_level": channel.saturation.saturation_level,
                "gain": channel.saturation.gain,
            },
            "post_fir": {"taps": channel.post_fir.taps.tolist()},
            "mzm": None if channel.mzm is None else {"v_pi": channel.mzm.v_pi},
            "noise_snr_db": channel.noise_snr_db,
            "seed": channel.seed,
        },
    }
    return doc


def channel_from_dict(doc):
    c = doc["channel"]
    return TxChannel(
        dac_bits=c.get("dac_bits"),
        dac_full_scale=c.get("dac_full_scale", 1.0),
        pre_fir=FirBlock(np.asarray(c["pre_fir"]["taps"])),
        saturation=SaturationSpec(**c["saturation"]),
        post_fir=FirBlock(np.asarray(c["post_fir"]["taps"])),
        mzm=None if c.get("mzm") is None else MzmSpec(**c["mzm"]),
        noise_snr_db=c.get("noise_snr_db"),
        seed=c.get("seed", 0))


def save_channel(channel, path):
    with open(path, "w") as f:
        json.dump(channel_to_dict(channel), f, indent=2)


def load_channel(path):
    with open(path) as f:
        return channel_from_dict(json.load(f))
