"""Minimal fully-connected Q-network with hand-written backprop.

Hidden layers are ReLU, the output layer is linear, and everything runs in
float64 so the finite-difference gradient check is meaningful at 1e-4
relative tolerance. Weights use He-style uniform init (+-sqrt(6/fan_in))
from a seeded generator; given the same spec, forward, backward, and
updates are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class TrainingError(RuntimeError):
    """Non-finite values encountered while updating parameters."""


@dataclass(frozen=True)
class MlpSpec:
    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    activation: str = "relu"
    init_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(self.hidden))
        if self.input_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("all layer dims must be >= 1")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")

    def layer_dims(self) -> list[tuple[int, int]]:
        sizes = [self.input_dim, *self.hidden, self.output_dim]
        return [(sizes[i + 1], sizes[i]) for i in range(len(sizes) - 1)]


@dataclass
class MlpParams:
    """Per-layer weight matrices (out x in) and bias vectors."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def n_layers(self) -> int:
        return len(self.weights)


def init_params(spec: MlpSpec) -> MlpParams:
    rng = np.random.default_rng(spec.init_seed)
    weights, biases = [], []
    for out_dim, in_dim in spec.layer_dims():
        bound = np.sqrt(6.0 / in_dim)
        weights.append(rng.uniform(-bound, bound, size=(out_dim, in_dim)))
        biases.append(np.zeros(out_dim))
    return MlpParams(weights, biases)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Q-values for a single input vector."""
    h = np.asarray(x, dtype=float)
    if h.ndim != 1 or h.shape[0] != params.weights[0].shape[1]:
        raise ValueError(f"input shape {h.shape} does not match network input dim")
    last = params.n_layers() - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = w @ h + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h


def forward_batch(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Q-values for a batch of inputs, shape (batch, input_dim)."""
    h = np.asarray(x, dtype=float)
    last = params.n_layers() - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w.T + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h


def backward(params: MlpParams, x: np.ndarray, output_grad: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradients of sum(output * output_grad) w.r.t. every weight and bias.

    Returns one (dW, db) pair per layer. ReLU takes subgradient 0 at 0.
    """
    grads = backward_batch(
        params,
        np.asarray(x, dtype=float)[None, :],
        np.asarray(output_grad, dtype=float)[None, :],
    )
    return grads


def backward_batch(
    params: MlpParams, x: np.ndarray, output_grad: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    x = np.asarray(x, dtype=float)
    g = np.asarray(output_grad, dtype=float)
    if g.shape[1] != params.weights[-1].shape[0]:
        raise ValueError("output_grad width does not match network output dim")
    last = params.n_layers() - 1

    # forward pass, caching layer inputs and pre-activations
    inputs = [x]
    pre = []
    h = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        pre.append(z)
        h = np.maximum(z, 0.0) if i < last else z
        if i < last:
            inputs.append(h)

    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * params.n_layers()
    for i in range(last, -1, -1):
        grads[i] = (g.T @ inputs[i], g.sum(axis=0))
        if i > 0:
            g = (g @ params.weights[i]) * (pre[i - 1] > 0.0)
    return grads


@dataclass
class OptimState:
    """SGD or Adam (with bias correction) over MlpParams."""

    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")


def apply_update(
    params: MlpParams,
    grads: list[tuple[np.ndarray, np.ndarray]],
    optim: OptimState,
) -> MlpParams:
    """One optimizer step in place; returns the updated params."""
    for dw, db in grads:
        if not (np.all(np.isfinite(dw)) and np.all(np.isfinite(db))):
            raise TrainingError("non-finite gradient encountered")
    flat = [g for pair in grads for g in pair]
    tensors = [t for pair in zip(params.weights, params.biases) for t in pair]

    if optim.kind == "sgd":
        for p, g in zip(tensors, flat):
            p -= optim.learning_rate * g
    else:
        if not optim.m:
            optim.m = [np.zeros_like(t) for t in tensors]
            optim.v = [np.zeros_like(t) for t in tensors]
        t = optim.step_count + 1
        c1 = 1.0 - optim.beta1**t
        c2 = 1.0 - optim.beta2**t
        for p, g, m, v in zip(tensors, flat, optim.m, optim.v):
            m *= optim.beta1
            m += (1.0 - optim.beta1) * g
            v *= optim.beta2
            v += (1.0 - optim.beta2) * g * g
            p -= optim.learning_rate * (m / c1) / (np.sqrt(v / c2) + optim.eps)
    optim.step_count += 1
    if __debug__:
        for t in tensors:
            assert np.all(np.isfinite(t)), "parameters went non-finite after update"
    return params


@dataclass(frozen=True)
class GradCheckReport:
    max_rel_error: float
    passed: bool
    worst_param: str


DEFAULT_CHECK_SPEC = MlpSpec(input_dim=4, hidden=(8,), output_dim=3, init_seed=0)


def gradient_check(
    spec: MlpSpec = DEFAULT_CHECK_SPEC,
    seed: int = 0,
    tolerance: float = 1e-4,
    backward_fn=backward,
) -> GradCheckReport:
    """Compare analytic gradients against central finite differences.

    The scalar probe is a fixed random projection of the network output;
    every weight and bias coordinate is perturbed with h=1e-5. Relative
    error uses max(|analytic|, |numeric|, 1) as denominator so near-zero
    gradients are compared absolutely.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be > 0")
    h = 1e-5
    rng = np.random.default_rng(seed)
    params = init_params(spec)
    x = rng.uniform(-1.0, 1.0, size=spec.input_dim)
    probe = rng.uniform(-1.0, 1.0, size=spec.output_dim)

    analytic = backward_fn(params, x, probe)
    max_err = 0.0
    worst = ""
    for layer, (dw, db) in enumerate(analytic):
        for name, tensor, grad in (("w", params.weights[layer], dw), ("b", params.biases[layer], db)):
            it = np.nditer(tensor, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = tensor[idx]
                tensor[idx] = orig + h
                up = float(probe @ forward(params, x))
                tensor[idx] = orig - h
                down = float(probe @ forward(params, x))
                tensor[idx] = orig
                numeric = (up - down) / (2.0 * h)
                a = float(np.asarray(grad)[idx])
                err = abs(a - numeric) / max(abs(a), abs(numeric), 1.0)
                if err > max_err:
                    max_err = err
                    worst = f"layer{layer}.{name}[{','.join(map(str, idx))}]"
    return GradCheckReport(max_rel_error=max_err, passed=max_err < tolerance, worst_param=worst)


# --- model file -------------------------------------------------------------
#
# {"spec": {...}, "layers": [{"w": [[...]], "b": [...]}, ...]} plus any extra
# top-level blocks the caller wants to persist (the DQN stores its config).


def save_model(params: MlpParams, spec: MlpSpec, path: str | Path, extra: dict | None = None) -> None:
    obj = {
        "spec": {
            "input_dim": spec.input_dim,
            "hidden": list(spec.hidden),
            "output_dim": spec.output_dim,
            "activation": spec.activation,
            "init_seed": spec.init_seed,
        },
        "layers": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }
    if extra:
        obj.update(extra)
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[MlpSpec, MlpParams, dict]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    spec_obj = obj["spec"]
    spec = MlpSpec(
        input_dim=int(spec_obj["input_dim"]),
        hidden=tuple(int(x) for x in spec_obj["hidden"]),
        output_dim=int(spec_obj["output_dim"]),
        activation=spec_obj["activation"],
        init_seed=int(spec_obj["init_seed"]),
    )
    weights, biases = [], []
    for layer in obj["layers"]:
        weights.append(np.asarray(layer["w"], dtype=float))
        biases.append(np.asarray(layer["b"], dtype=float))
    params = MlpParams(weights, biases)
    for (out_dim, in_dim), w, b in zip(spec.layer_dims(), weights, biases):
        if w.shape != (out_dim, in_dim) or b.shape != (out_dim,):
            raise ValueError("layer shapes do not match spec")
    extra = {k: v for k, v in obj.items() if k not in ("spec", "layers")}
    return spec, params, extra
