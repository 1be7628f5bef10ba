"""Baseband signal generation, pulse shaping, alignment and quality metrics.

Complex baseband is carried as two independent real rails (I and Q); every
waveform-level operation here works on one real rail at a time, mirroring
the per-DA electrical processing of the transmitter.
"""

from dataclasses import dataclass, field

import numpy as np

#: snr_db returns this when the error power underflows (noiseless loopback).
SNR_CEILING_DB = 100.0


class AlignmentError(RuntimeError):
    """Raised when synchronize cannot find an unambiguous correlation peak."""


@dataclass
class SampledSignal:
    """A real-valued sample sequence with rate metadata.

    samples_per_symbol ties the waveform back to the symbol clock; label is
    free text for bookkeeping in reports.
    """

    samples: np.ndarray
    samples_per_symbol: float = 1.0
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.size == 0:
            raise ValueError("SampledSignal must be non-empty")
        if not self.samples_per_symbol > 0:
            raise ValueError("samples_per_symbol must be > 0")

    def rms(self):
        return float(np.sqrt(np.mean(self.samples ** 2)))

    def with_samples(self, samples, label=None):
        return SampledSignal(samples, self.samples_per_symbol,
                             self.label if label is None else label)


def _gray_levels(bits_per_axis):
    """Amplitude levels indexed by the Gray-coded bit pattern of one axis.

    Per-axis reflected Gray code: bit pattern b, interpreted as the Gray code
    g = i ^ (i >> 1) of index i, maps to the i-th level counted downward from
    the positive rail. For 2 bits: 00,01,11,10 -> +3,+1,-1,-3.
    """
    n = 1 << bits_per_axis
    levels = np.empty(n)
    for i in range(n):
        g = i ^ (i >> 1)
        levels[g] = (n - 1) - 2 * i
    return levels


@dataclass
class ConstellationSpec:
    """Square Gray-coded QAM normalized to unit average power."""

    order: int

    def __post_init__(self):
        if self.order not in (4, 16, 64):
            raise ValueError("order must be 4, 16 or 64")
        self.bits_per_symbol = int(np.log2(self.order))
        b = self.bits_per_symbol // 2
        levels = _gray_levels(b)
        # unit average power: E|s|^2 = 2 * mean(levels^2) before scaling
        self._scale = np.sqrt(2.0 * np.mean(levels ** 2))
        self._levels = levels / self._scale

    def mapping(self):
        """Bit-tuple -> constellation point table (first half of bits is I)."""
        b = self.bits_per_symbol // 2
        table = {}
        for w in range(self.order):
            bits = tuple((w >> (self.bits_per_symbol - 1 - i)) & 1
                         for i in range(self.bits_per_symbol))
            gi = w >> b
            gq = w & ((1 << b) - 1)
            table[bits] = self._levels[gi] + 1j * self._levels[gq]
        return table


def qam_modulate(bits, spec):
    """Map a 0/1 bit sequence to Gray-coded QAM symbols.

    The first half of each symbol's bits selects the I level, the second half
    the Q level. Rejects bit counts not divisible by bits-per-symbol.
    """
    bits = np.asarray(bits, dtype=np.int64)
    bps = spec.bits_per_symbol
    if bits.size % bps != 0:
        raise ValueError(f"bit count {bits.size} not divisible by {bps}")
    if bits.size == 0:
        return np.empty(0, dtype=np.complex128)
    b = bps // 2
    words = bits.reshape(-1, bps)
    weights = 1 << np.arange(b - 1, -1, -1)
    gi = words[:, :b] @ weights
    gq = words[:, b:] @ weights
    return spec._levels[gi] + 1j * spec._levels[gq]


@dataclass
class RrcSpec:
    """Root-raised-cosine pulse shaping parameters."""

    rolloff: float
    span_symbols: int = 16
    samples_per_symbol: int = 2

    def __post_init__(self):
        if not 0.0 < self.rolloff <= 1.0:
            raise ValueError("rolloff must be in (0, 1]")
        if self.span_symbols <= 0 or self.span_symbols % 2 != 0:
            raise ValueError("span_symbols must be a positive even integer")
        if self.samples_per_symbol <= 0:
            raise ValueError("samples_per_symbol must be positive")


def rrc_taps(spec):
    """Unit-energy RRC taps, symmetric, length span*sps + 1."""
    beta = spec.rolloff
    sps = spec.samples_per_symbol
    n = spec.span_symbols * sps + 1
    t = (np.arange(n) - (n - 1) / 2) / sps  # in symbol periods
    taps = np.empty(n)
    for i, ti in enumerate(t):
        if abs(ti) < 1e-12:
            taps[i] = 1.0 - beta + 4.0 * beta / np.pi
        elif abs(abs(ti) - 1.0 / (4.0 * beta)) < 1e-12:
            taps[i] = (beta / np.sqrt(2.0)) * (
                (1.0 + 2.0 / np.pi) * np.sin(np.pi / (4.0 * beta))
                + (1.0 - 2.0 / np.pi) * np.cos(np.pi / (4.0 * beta)))
        else:
            num = (np.sin(np.pi * ti * (1.0 - beta))
                   + 4.0 * beta * ti * np.cos(np.pi * ti * (1.0 + beta)))
            den = np.pi * ti * (1.0 - (4.0 * beta * ti) ** 2)
            taps[i] = num / den
    return taps / np.sqrt(np.sum(taps ** 2))


def shape_pulse(symbols, spec):
    """Upsample and RRC-shape complex symbols into real I and Q rails.

    Zero-padded "full" convolution truncated to center, so each rail has
    exactly len(symbols) * sps samples.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.size == 0:
        raise ValueError("symbols must be non-empty")
    sps = spec.samples_per_symbol
    taps = rrc_taps(spec)
    up = np.zeros(symbols.size * sps, dtype=np.complex128)
    up[::sps] = symbols
    c = len(taps) // 2
    shaped = np.convolve(up, taps)[c:c + up.size]
    i_rail = SampledSignal(shaped.real, sps, "I")
    q_rail = SampledSignal(shaped.imag, sps, "Q")
    return i_rail, q_rail


def synchronize(reference, received, min_peak=0.1):
    """Find the delay of received vs reference by circular cross-correlation.

    Returns (delay, aligned) where aligned is received rotated back by delay
    and truncated to the reference length. Raises AlignmentError when the
    normalized correlation peak falls below min_peak.
    """
    r = reference.samples
    v = received.samples
    if v.size < r.size:
        raise ValueError("received shorter than reference")
    rp = np.zeros(v.size)
    rp[:r.size] = r
    corr = np.fft.irfft(np.fft.rfft(v) * np.conj(np.fft.rfft(rp)), v.size)
    peak = int(np.argmax(corr))
    norm = np.linalg.norm(r) * np.linalg.norm(v)
    if norm == 0 or corr[peak] / norm < min_peak:
        raise AlignmentError("correlation peak below floor; alignment ambiguous")
    aligned = np.roll(v, -peak)[:r.size]
    return peak, received.with_samples(aligned)


def rms_normalize(x, target_rms):
    """Scale a signal to the requested RMS."""
    if target_rms <= 0:
        raise ValueError("target_rms must be > 0")
    cur = x.rms()
    if cur == 0:
        raise ValueError("cannot RMS-normalize an all-zero signal")
    return x.with_samples(x.samples * (target_rms / cur))


def _as_array(x):
    return x.samples if isinstance(x, SampledSignal) else np.asarray(x)


def snr_db(reference, demodulated, ceiling=SNR_CEILING_DB):
    """10*log10(E|r|^2 / E|r - g*d|^2) with the least-squares gain g.

    Accepts real rails, complex sequences or SampledSignals. The optimal
    gain removes any residual scale (and sign) before the ratio; the return
    value is capped at `ceiling` when the error power underflows.
    """
    r = _as_array(reference)
    d = _as_array(demodulated)
    if r.shape != d.shape:
        raise ValueError("reference and demodulated lengths differ")
    g = np.vdot(d, r) / np.vdot(d, d)
    if not np.iscomplexobj(r) and not np.iscomplexobj(d):
        g = g.real
    err = r - g * d
    p_sig = np.mean(np.abs(r) ** 2)
    p_err = np.mean(np.abs(err) ** 2)
    if p_err <= p_sig * 10.0 ** (-ceiling / 10.0):
        return float(ceiling)
    return float(10.0 * np.log10(p_sig / p_err))


def papr_db(x):
    """Peak-to-average power ratio in dB."""
    s = _as_array(x)
    p_mean = np.mean(np.abs(s) ** 2)
    if p_mean == 0:
        raise ValueError("PAPR of an all-zero signal is undefined")
    return float(10.0 * np.log10(np.max(np.abs(s) ** 2) / p_mean))
