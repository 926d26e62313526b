"""Learnable pilot-to-beam mapping.

A small real-valued MLP consumes the received pilot vector as stacked
real/imaginary parts and emits a wavenumber-domain (or, without a transform,
antenna-domain) beam the same way.  The training signal is the modulus of the
inner product between the constant-modulus beam and the received vector, and
parameters move by gradient *ascent* with Adam moments.

Gradients are accumulated in reverse mode by hand.  Complex intermediates use
conjugate cotangents c_x = dL/d(conj x); for the real loss L this gives
dL/d(Re x) = 2 Re c_x and dL/d(Im x) = 2 Im c_x at the complex/real seam.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .wavenumber import TransformOperator

# Below this modulus a raw beam element is treated as zero: its normalized
# value becomes 1 (zero phase) and its gradient contribution is dropped,
# since v/|v| has no derivative at the origin.
ZERO_MODULUS = 1e-12


@dataclass(eq=False)
class MapperParameters:
    """Per-layer weight matrices and bias vectors of the real MLP."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def input_size(self) -> int:
        """Complex input length (half the first real dimension)."""
        return self.layer_dims[0] // 2

    @property
    def output_size(self) -> int:
        """Complex output length (half the last real dimension)."""
        return self.layer_dims[-1] // 2


@dataclass(eq=False)
class MapperGradients:
    """Same structure as MapperParameters, holding dL/d(parameter)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


@dataclass(eq=False)
class OptimizerState:
    """Adam moments plus step counter and hyperparameters."""

    first_moment_weights: list[np.ndarray]
    first_moment_biases: list[np.ndarray]
    second_moment_weights: list[np.ndarray]
    second_moment_biases: list[np.ndarray]
    step_count: int
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8


def mapper_layer_dims(input_size: int, output_size: int, hidden=(128, 64)) -> list[int]:
    """Real layer dimensions for complex input/output lengths."""
    return [2 * input_size, *hidden, 2 * output_size]


def init_params(layer_dims: list[int], rng: np.random.Generator) -> MapperParameters:
    """Uniform weights scaled by 1/sqrt(fan_in); zero biases."""
    if len(layer_dims) < 2:
        raise ValueError("need at least an input and an output layer")
    if any(d <= 0 for d in layer_dims):
        raise ValueError(f"layer dimensions must be positive, got {layer_dims}")
    if layer_dims[0] % 2 or layer_dims[-1] % 2:
        raise ValueError("input and output dimensions must be even (stacked Re/Im)")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, (fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MapperParameters(weights=weights, biases=biases)


def init_optimizer(params: MapperParameters, learning_rate: float) -> OptimizerState:
    if learning_rate <= 0:
        raise ValueError(f"learning rate must be positive, got {learning_rate}")
    return OptimizerState(
        first_moment_weights=[np.zeros_like(w) for w in params.weights],
        first_moment_biases=[np.zeros_like(b) for b in params.biases],
        second_moment_weights=[np.zeros_like(w) for w in params.weights],
        second_moment_biases=[np.zeros_like(b) for b in params.biases],
        step_count=0,
        learning_rate=learning_rate,
    )


def forward_trace(params: MapperParameters, stacked_input: np.ndarray):
    """Run the real MLP, returning pre-activations and activations per layer.

    ``activations[0]`` is the input; hidden layers apply the rectifier, the
    last layer is affine only.
    """
    activations = [stacked_input]
    pre_activations = []
    h = stacked_input
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = w @ h + b
        pre_activations.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        activations.append(h)
    return pre_activations, activations


def _stack(x: np.ndarray) -> np.ndarray:
    return np.concatenate([x.real, x.imag])


def forward(params: MapperParameters, x: np.ndarray) -> np.ndarray:
    """Map a complex vector through the MLP to a complex vector."""
    if x.shape != (params.input_size,):
        raise DimensionMismatchError(
            f"input length {x.shape} does not match mapper input {params.input_size}"
        )
    _, activations = forward_trace(params, _stack(x))
    out = activations[-1]
    half = out.size // 2
    return out[:half] + 1j * out[half:]


def _normalize_phases(v: np.ndarray):
    """Unit-modulus version of v and the mask of elements treated as zero."""
    moduli = np.abs(v)
    mask = moduli < ZERO_MODULUS
    safe = np.where(mask, 1.0, moduli)
    unit = np.where(mask, 1.0 + 0.0j, v / safe)
    return unit, moduli, mask


def loss_and_gradient(
    params: MapperParameters,
    received: np.ndarray,
    transform: TransformOperator | None = None,
    conjugate: bool = False,
):
    """Alignment reward and its gradient with respect to every parameter.

    The raw beam is the mapper output pushed through the transform (its
    conjugate on the UE side, or nothing in ablation mode).  The reward is
    (1/sqrt(K)) |(v / |v|)^T received| for K antennas; ``received`` is held
    constant.  Returns (loss, MapperGradients).
    """
    k = received.size
    if k != params.input_size:
        raise DimensionMismatchError(
            f"received length {k} does not match mapper input {params.input_size}"
        )
    if transform is not None:
        mapping = transform.matrix.conj() if conjugate else transform.matrix
        if mapping.shape[0] != k:
            raise DimensionMismatchError(
                f"received length {k} does not match transform rows {mapping.shape[0]}"
            )
        if mapping.shape[1] != params.output_size:
            raise DimensionMismatchError(
                f"mapper output {params.output_size} does not match transform "
                f"columns {mapping.shape[1]}"
            )
    else:
        mapping = None
        if params.output_size != k:
            raise DimensionMismatchError(
                f"mapper output {params.output_size} must equal received length {k} "
                "without a transform"
            )

    pre_activations, activations = forward_trace(params, _stack(received))
    out = activations[-1]
    half = out.size // 2
    w_complex = out[:half] + 1j * out[half:]
    v = mapping @ w_complex if mapping is not None else w_complex

    unit, moduli, mask = _normalize_phases(v)
    inner = unit @ received
    scale = 1.0 / math.sqrt(k)
    loss = scale * abs(inner)

    # Conjugate cotangents back through |z|, the inner product, the
    # normalization, and the linear map.
    if abs(inner) < ZERO_MODULUS:
        c_inner = 0.0 + 0.0j
    else:
        c_inner = scale * inner / (2.0 * abs(inner))
    c_unit = c_inner * received.conj()
    with np.errstate(invalid="ignore", divide="ignore"):
        c_v = c_unit / (2.0 * moduli) - c_unit.conj() * v**2 / (2.0 * moduli**3)
    c_v = np.where(mask, 0.0 + 0.0j, c_v)
    c_w = mapping.conj().T @ c_v if mapping is not None else c_v

    grad_out = np.concatenate([2.0 * c_w.real, 2.0 * c_w.imag])

    grad_weights = [np.empty(0)] * len(params.weights)
    grad_biases = [np.empty(0)] * len(params.biases)
    g = grad_out
    for i in range(len(params.weights) - 1, -1, -1):
        grad_weights[i] = np.outer(g, activations[i])
        grad_biases[i] = g.copy()
        if i > 0:
            g = params.weights[i].T @ g
            g = g * (pre_activations[i - 1] > 0)
    return loss, MapperGradients(weights=grad_weights, biases=grad_biases)


def ascent_step(
    params: MapperParameters, state: OptimizerState, grads: MapperGradients
):
    """One Adam step in the +gradient direction; returns new params and state."""
    for got, expect in zip(grads.weights, params.weights):
        if got.shape != expect.shape:
            raise DimensionMismatchError(
                f"gradient shape {got.shape} does not match parameter {expect.shape}"
            )
    t = state.step_count + 1
    b1, b2, eps, lr = state.beta1, state.beta2, state.epsilon, state.learning_rate

    def update(value, grad, m, v):
        m_new = b1 * m + (1.0 - b1) * grad
        v_new = b2 * v + (1.0 - b2) * grad**2
        m_hat = m_new / (1.0 - b1**t)
        v_hat = v_new / (1.0 - b2**t)
        return value + lr * m_hat / (np.sqrt(v_hat) + eps), m_new, v_new

    new_weights, new_biases = [], []
    mw, mb, vw, vb = [], [], [], []
    for w, g, m, v in zip(
        params.weights, grads.weights, state.first_moment_weights,
        state.second_moment_weights,
    ):
        w_new, m_new, v_new = update(w, g, m, v)
        new_weights.append(w_new)
        mw.append(m_new)
        vw.append(v_new)
    for b, g, m, v in zip(
        params.biases, grads.biases, state.first_moment_biases,
        state.second_moment_biases,
    ):
        b_new, m_new, v_new = update(b, g, m, v)
        new_biases.append(b_new)
        mb.append(m_new)
        vb.append(v_new)
    new_state = OptimizerState(
        first_moment_weights=mw,
        first_moment_biases=mb,
        second_moment_weights=vw,
        second_moment_biases=vb,
        step_count=t,
        learning_rate=lr,
        beta1=b1,
        beta2=b2,
        epsilon=eps,
    )
    return MapperParameters(weights=new_weights, biases=new_biases), new_state


def finite_difference_gradients(
    params: MapperParameters,
    received: np.ndarray,
    transform: TransformOperator | None = None,
    conjugate: bool = False,
    step: float = 1e-6,
) -> MapperGradients:
    """Central-difference gradients of the same loss, for checking the
    reverse-mode path."""

    def loss_at(p):
        value, _ = loss_and_gradient(p, received, transform, conjugate)
        return value

    def perturbed(arrays, layer, index, delta):
        copies = [a.copy() for a in arrays]
        copies[layer].flat[index] += delta
        return copies

    grad_weights, grad_biases = [], []
    for layer, w in enumerate(params.weights):
        grad = np.zeros_like(w)
        for index in range(w.size):
            up = MapperParameters(perturbed(params.weights, layer, index, step), params.biases)
            down = MapperParameters(perturbed(params.weights, layer, index, -step), params.biases)
            grad.flat[index] = (loss_at(up) - loss_at(down)) / (2.0 * step)
        grad_weights.append(grad)
    for layer, b in enumerate(params.biases):
        grad = np.zeros_like(b)
        for index in range(b.size):
            up = MapperParameters(params.weights, perturbed(params.biases, layer, index, step))
            down = MapperParameters(params.weights, perturbed(params.biases, layer, index, -step))
            grad.flat[index] = (loss_at(up) - loss_at(down)) / (2.0 * step)
        grad_biases.append(grad)
    return MapperGradients(weights=grad_weights, biases=grad_biases)


def max_relative_gradient_error(
    analytic: MapperGradients, numeric: MapperGradients, floor: float = 1e-4
) -> float:
    """Largest relative disagreement between two gradient sets.

    Entries whose magnitude sits below ``floor`` are compared against the
    floor instead: central differences of a unit-scale loss carry ~1e-10 of
    cancellation roundoff, which would otherwise swamp the ratio on gradient
    entries that are genuinely zero.
    """
    worst = 0.0
    for a, n in zip(analytic.weights + analytic.biases, numeric.weights + numeric.biases):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst
