"""Backpropagation through the WH cascade, Adam updates, and the
indirect-learning loop that turns a fitted post-estimator into a
pre-distorter.

Gradients are normalized by the sample count N (pure learning-rate
rescaling; fixed points are unchanged) so tolerances and learning rates are
length-independent. The training objective is therefore
(0.5*||y - ref||^2 + ridge * sum(theta^2)) / N.
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dsp import SampledSignal, rms_normalize, synchronize
from .model import (FirBlock, PolyNlBlock, WhModel, model_from_dict,
                    model_to_dict, nl_apply, wh_forward)


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, iteration):
        super().__init__(f"training diverged at iteration {iteration}")
        self.iteration = iteration


@dataclass
class WhGradients:
    """Per-block gradients mirroring a WhModel: arrays for FIR taps,
    order->value dicts for polynomial coefficients."""

    per_layer: list

    def norm(self):
        total = 0.0
        for g in self.per_layer:
            if isinstance(g, dict):
                total += sum(v * v for v in g.values())
            else:
                total += float(np.dot(g, g))
        return float(np.sqrt(total))


def _check_congruent(model, grads):
    if len(model.layers) != len(grads.per_layer):
        raise ValueError("gradient/model block count mismatch")
    for block, g in zip(model.layers, grads.per_layer):
        if isinstance(block, FirBlock):
            if not isinstance(g, np.ndarray) or g.size != block.taps.size:
                raise ValueError("gradient/model tap count mismatch")
        else:
            if not isinstance(g, dict) or set(g) != set(block.coeffs):
                raise ValueError("gradient/model coefficient keys mismatch")


def model_coeff_sumsq(model):
    total = 0.0
    for block in model.layers:
        if isinstance(block, FirBlock):
            total += float(np.dot(block.taps, block.taps))
        else:
            total += sum(a * a for a in block.coeffs.values())
    return total


def loss(y_out, reference, model=None, ridge=0.0):
    """0.5 * sum((y - ref)^2), plus ridge * sum(theta^2) when configured."""
    y = y_out.samples if isinstance(y_out, SampledSignal) else np.asarray(y_out)
    r = reference.samples if isinstance(reference, SampledSignal) else np.asarray(reference)
    if y.shape != r.shape:
        raise ValueError("output/reference length mismatch")
    e = 0.5 * float(np.sum((y - r) ** 2))
    if ridge > 0.0 and model is not None:
        e += ridge * model_coeff_sumsq(model)
    return e


def wh_backward(model, intermediates, reference):
    """Exact gradients of the normalized data loss w.r.t. every coefficient.

    intermediates must come from wh_forward on the same model and input: one
    input array per layer plus the final output. FIR gradients are the
    adjoint of the same-length zero-padded convolution (correlation with the
    flipped filter restricted to the same window); polynomial gradients are
    dE/da_m = sum_n g_n y_n^m with local slope 1 + sum m a_m y^(m-1).
    """
    if len(intermediates) != len(model.layers) + 1:
        raise ValueError("intermediates do not match the model")
    ref = reference.samples if isinstance(reference, SampledSignal) else np.asarray(reference)
    out = intermediates[-1]
    if out.shape != ref.shape:
        raise ValueError("output/reference length mismatch")
    n = out.size
    g = (out - ref) / n
    per_layer = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        block = model.layers[i]
        x_in = intermediates[i]
        if x_in.shape != g.shape:
            raise ValueError("intermediates do not match the model")
        if isinstance(block, FirBlock):
            per_layer[i] = kernels.fir_grad_taps(g, x_in, block.taps.size)
            g = kernels.fir_grad_input(g, block.taps)
        else:
            ga = {m: float(np.dot(g, x_in ** m)) for m in block.coeffs}
            per_layer[i] = ga
            if block.coeffs:
                g = g * kernels.poly_slope(x_in, block.orders(), block.values())
    return WhGradients(per_layer)


def add_ridge_gradient(grads, model, ridge, n):
    """In-place ridge term 2*lambda*theta / n on every coefficient."""
    for block, g in zip(model.layers, grads.per_layer):
        if isinstance(block, FirBlock):
            g += (2.0 * ridge / n) * block.taps
        else:
            for m in g:
                g[m] += (2.0 * ridge / n) * block.coeffs[m]


@dataclass
class AdamState:
    """Per-coefficient Adam moments plus hyperparameters.

    Taps and nonlinear coefficients get separate learning rates because
    their magnitudes differ by orders of magnitude in practice.
    """

    lr_taps: float = 1e-3
    lr_nl: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_model(cls, model, **kwargs):
        state = cls(**kwargs)
        for block in model.layers:
            if isinstance(block, FirBlock):
                state.m.append(np.zeros(block.taps.size))
                state.v.append(np.zeros(block.taps.size))
            else:
                state.m.append({k: 0.0 for k in block.coeffs})
                state.v.append({k: 0.0 for k in block.coeffs})
        return state


def adam_step(state, model, grads, freeze_nonlinear=False):
    """One bias-corrected Adam update, in place; returns (state, model)."""
    _check_congruent(model, grads)
    if len(state.m) != len(model.layers):
        raise ValueError("state/model block count mismatch")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for i, block in enumerate(model.layers):
        g = grads.per_layer[i]
        if isinstance(block, FirBlock):
            state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
            state.v[i] = b2 * state.v[i] + (1.0 - b2) * g ** 2
            m_hat = state.m[i] / c1
            v_hat = state.v[i] / c2
            block.taps -= state.lr_taps * m_hat / (np.sqrt(v_hat) + state.eps)
        else:
            if freeze_nonlinear:
                continue
            for k in block.coeffs:
                gm = g[k]
                state.m[i][k] = b1 * state.m[i][k] + (1.0 - b1) * gm
                state.v[i][k] = b2 * state.v[i][k] + (1.0 - b2) * gm ** 2
                m_hat = state.m[i][k] / c1
                v_hat = state.v[i][k] / c2
                block.coeffs[k] -= state.lr_nl * m_hat / (np.sqrt(v_hat) + state.eps)
    return state, model


@dataclass
class FitConfig:
    iterations: int = 2000
    lr_taps: float = 1e-3
    lr_nl: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    tol: float = 1e-9          # relative loss change over tol_window iterations
    tol_window: int = 10
    ridge: float = 0.0
    seed: int = 0
    freeze_nonlinear: bool = False

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iteration budget must be >= 1")
        if self.tol <= 0:
            raise ValueError("tolerance must be > 0")
        if self.ridge < 0:
            raise ValueError("ridge weight must be >= 0")


@dataclass
class DpdArtifact:
    """Trained model plus the stored nonlinear-block input amplitudes
    (max absolute sample entering each PolyNlBlock on the final pass)."""

    model: WhModel
    nl_input_amplitudes: dict
    final_loss: float
    iterations: int
    history: list = field(default_factory=list, repr=False)

    @property
    def stored_nl_input_amplitude(self):
        if not self.nl_input_amplitudes:
            return 1.0
        return max(self.nl_input_amplitudes.values())


def artifact_to_dict(artifact):
    doc = model_to_dict(artifact.model)
    doc["nl_input_amplitudes"] = {str(k): v for k, v
                                  in artifact.nl_input_amplitudes.items()}
    doc["final_loss"] = artifact.final_loss
    doc["iterations"] = artifact.iterations
    return doc


def artifact_from_dict(doc):
    return DpdArtifact(
        model=model_from_dict(doc),
        nl_input_amplitudes={int(k): float(v) for k, v
                             in doc.get("nl_input_amplitudes", {}).items()},
        final_loss=float(doc.get("final_loss", float("nan"))),
        iterations=int(doc.get("iterations", 0)))


def _nl_input_amplitudes(model, intermediates):
    amps = {}
    for i, block in enumerate(model.layers):
        if isinstance(block, PolyNlBlock):
            amps[i] = float(np.max(np.abs(intermediates[i])))
    return amps


def fit_postestimator(received, reference, init, cfg):
    """Full-batch gradient fit of the post-estimator.

    received must already be synchronized and RMS-matched to reference.
    Stops at the iteration budget or when the relative loss change over
    cfg.tol_window iterations drops below cfg.tol. Returns the best model
    seen (so the final loss never exceeds the initial one).
    """
    model = init.copy()
    state = AdamState.for_model(model, lr_taps=cfg.lr_taps, lr_nl=cfg.lr_nl,
                                beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    n = received.samples.size
    history = []
    losses = []
    best_loss = np.inf
    best_model = model.copy()
    for it in range(cfg.iterations):
        out, inter = wh_forward(model, received)
        j = loss(out, reference, model, cfg.ridge) / n
        if not np.isfinite(j):
            raise TrainingDivergedError(it)
        if j < best_loss:
            best_loss = j
            best_model = model.copy()
        grads = wh_backward(model, inter, reference)
        if cfg.ridge > 0.0:
            add_ridge_gradient(grads, model, cfg.ridge, n)
        history.append((it, j, grads.norm()))
        losses.append(j)
        adam_step(state, model, grads, cfg.freeze_nonlinear)
        w = cfg.tol_window
        if it >= w:
            prev = losses[-1 - w]
            if prev > 0 and abs(losses[-1] - prev) / prev < cfg.tol:
                break
    out, inter = wh_forward(best_model, received)
    final_loss = loss(out, reference, best_model, cfg.ridge) / n
    return DpdArtifact(model=best_model,
                       nl_input_amplitudes=_nl_input_amplitudes(best_model, inter),
                       final_loss=final_loss,
                       iterations=len(history),
                       history=history)


def indirect_learn(tx_signal, channel, init, cfg):
    """One-shot indirect learning: pass the non-DPD signal through the
    channel, synchronize and RMS-match the capture, fit the post-estimator,
    and return it as the pre-distorter artifact."""
    rx = channel(tx_signal)
    _, aligned = synchronize(tx_signal, rx)
    normalized = rms_normalize(aligned, tx_signal.rms())
    return fit_postestimator(normalized, tx_signal, init, cfg)


def apply_dpd(artifact, x):
    """Run the trained cascade as a pre-distorter.

    Before each nonlinear block the signal is rescaled so its peak equals
    the stored training amplitude, and the scale is undone afterwards
    (f(s*x)/s = x + a s^2 x^3), reproducing the trained operating point of
    the nonlinearity while preserving overall gain.
    """
    cur = np.asarray(x.samples, dtype=np.float64)
    if np.max(np.abs(cur)) == 0:
        raise ValueError("cannot apply DPD to an all-zero signal")
    sig = x.with_samples(cur)
    for i, block in enumerate(artifact.model.layers):
        if isinstance(block, FirBlock):
            sig = sig.with_samples(kernels.fir_same(sig.samples, block.taps))
        else:
            amp = artifact.nl_input_amplitudes.get(i, 0.0)
            if amp <= 0:
                raise ValueError("artifact has no positive stored amplitude "
                                 f"for nonlinear block {i}")
            peak = float(np.max(np.abs(sig.samples)))
            s = amp / peak
            scaled = sig.with_samples(sig.samples * s)
            sig = nl_apply(block, scaled)
            sig = sig.with_samples(sig.samples / s)
    return sig


def rescale_nl_coeff(a, s, order=3):
    """Coefficient valid after input amplitudes change by factor s:
    a * s**(order-1), from f(s x)/s = x + a s^(m-1) x^m."""
    if s <= 0:
        raise ValueError("amplitude gain must be > 0")
    return a * s ** (order - 1)


def rescale_artifact(artifact, s):
    """New artifact whose polynomial coefficients are rescaled for an
    amplitude change by factor s (stored amplitudes scaled to match)."""
    model = artifact.model.copy()
    amps = {}
    for i, block in enumerate(model.layers):
        if isinstance(block, PolyNlBlock):
            block.coeffs = {m: rescale_nl_coeff(a, s, m)
                            for m, a in block.coeffs.items()}
            amps[i] = artifact.nl_input_amplitudes.get(i, 1.0) * s
    return DpdArtifact(model=model, nl_input_amplitudes=amps,
                       final_loss=artifact.final_loss,
                       iterations=artifact.iterations)
