"""Dense ReLU networks, interval bounds and CROWN-style affine relaxation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import HyperRectangle

ACTIVATIONS = ("relu", "linear")
NETWORK_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        w = np.array(self.weight, dtype=float)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if w.ndim != 2:
            raise ValueError("layer weight must be a matrix")
        if w.shape[0] != b.size:
            raise ValueError(f"weight has {w.shape[0]} rows but bias has {b.size} entries")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("weights and biases must be finite")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


class MlpNetwork:
    """Fully-connected network of affine layers, each followed by relu or identity.

    The last layer must be linear. Instances are immutable.
    """

    def __init__(self, layers: Sequence[Layer]):
        layers = tuple(layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weight.shape[1] != prev.weight.shape[0]:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.weight.shape} -> {nxt.weight.shape}"
                )
        if layers[-1].activation != "linear":
            raise ValueError("final layer activation must be linear")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    def __call__(self, x):
        return evaluate(self, x)

    def __eq__(self, other):
        if not isinstance(other, MlpNetwork) or len(self.layers) != len(other.layers):
            return False
        return all(
            a.activation == b.activation
            and np.array_equal(a.weight, b.weight)
            and np.array_equal(a.bias, b.bias)
            for a, b in zip(self.layers, other.layers)
        )

    def __repr__(self):
        widths = [self.input_dim] + [layer.weight.shape[0] for layer in self.layers]
        return f"MlpNetwork({'-'.join(map(str, widths))})"


@dataclass(frozen=True)
class AffineBoundPair:
    """Affine bounds ``Psi x + alpha <= pi(x) <= Phi x + beta`` valid on ``domain``."""

    Psi: np.ndarray
    alpha: np.ndarray
    Phi: np.ndarray
    beta: np.ndarray
    domain: HyperRectangle

    def lower_at(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.Psi.T + self.alpha

    def upper_at(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.Phi.T + self.beta


def evaluate(net: MlpNetwork, x) -> np.ndarray:
    """Exact forward pass. ``x`` may be one state or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.input_dim:
        raise ValueError(f"input has dimension {x.shape[-1]}, network expects {net.input_dim}")
    if not np.all(np.isfinite(x)):
        raise ValueError("network input must be finite")
    a = x
    for layer in net.layers:
        a = a @ layer.weight.T + layer.bias
        if layer.activation == "relu":
            a = np.maximum(a, 0.0)
    return a


def _interval_affine(weight, bias, lo, hi):
    w_pos = np.maximum(weight, 0.0)
    w_neg = np.minimum(weight, 0.0)
    return w_pos @ lo + w_neg @ hi + bias, w_pos @ hi + w_neg @ lo + bias


def interval_preactivation_bounds(
    net: MlpNetwork, domain: HyperRectangle
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pre-activation ``(lower, upper)`` for every layer, by interval arithmetic."""
    if domain.is_empty:
        raise ValueError("cannot bound a network over an empty domain")
    if domain.dim != net.input_dim:
        raise ValueError(f"domain has dimension {domain.dim}, network expects {net.input_dim}")
    lo, hi = domain.lower, domain.upper
    bounds = []
    for layer in net.layers:
        pre_lo, pre_hi = _interval_affine(layer.weight, layer.bias, lo, hi)
        bounds.append((pre_lo, pre_hi))
        if layer.activation == "relu":
            lo, hi = np.maximum(pre_lo, 0.0), np.maximum(pre_hi, 0.0)
        else:
            lo, hi = pre_lo, pre_hi
    return bounds


def relu_relaxation(lo: np.ndarray, hi: np.ndarray):
    """Per-neuron linear bounds ``a_l z <= relu(z) <= a_u z + b_u`` on ``[lo, hi]``.

    Returns ``(lower_slope, upper_slope, upper_intercept)``; the lower intercept
    is always zero. For unstable neurons the lower slope is 1 when ``hi >= -lo``
    and 0 otherwise.
    """
    active = lo >= 0
    inactive = hi <= 0
    unstable = ~(active | inactive)

    lower_slope = np.where(active, 1.0, 0.0)
    upper_slope = np.where(active, 1.0, 0.0)
    upper_icpt = np.zeros_like(lo)

    if np.any(unstable):
        l, u = lo[unstable], hi[unstable]
        s = u / (u - l)
        upper_slope[unstable] = s
        upper_icpt[unstable] = -s * l
        lower_slope[unstable] = np.where(u >= -l, 1.0, 0.0)
    return lower_slope, upper_slope, upper_icpt


def crown_relax(net: MlpNetwork, domain: HyperRectangle) -> AffineBoundPair:
    """Affine lower/upper bounds on ``net`` over ``domain`` by backward substitution.

    Intermediate ReLU inputs are bounded with interval arithmetic; each hidden
    neuron is then replaced by its linear relaxation while the output-layer
    coefficients are pushed back to the input.
    """
    pre_bounds = interval_preactivation_bounds(net, domain)
    last = net.layers[-1]

    # (coeff, const) pairs for the upper and lower bound, in terms of the
    # post-activation of the layer being peeled.
    lam_u, c_u = last.weight.copy(), last.bias.copy()
    lam_l, c_l = last.weight.copy(), last.bias.copy()

    for k in range(len(net.layers) - 2, -1, -1):
        layer = net.layers[k]
        if layer.activation == "relu":
            lo, hi = pre_bounds[k]
            a_l, a_u, b_u = relu_relaxation(lo, hi)
            # Upper bound: positive coefficients take the upper relaxation.
            pos, neg = np.maximum(lam_u, 0.0), np.minimum(lam_u, 0.0)
            c_u = c_u + pos @ b_u
            lam_u = pos * a_u + neg * a_l
            pos, neg = np.maximum(lam_l, 0.0), np.minimum(lam_l, 0.0)
            c_l = c_l + neg @ b_u
            lam_l = pos * a_l + neg * a_u
        c_u = c_u + lam_u @ layer.bias
        lam_u = lam_u @ layer.weight
        c_l = c_l + lam_l @ layer.bias
        lam_l = lam_l @ layer.weight

    for arr in (lam_u, c_u, lam_l, c_l):
        if not np.all(np.isfinite(arr)):
            raise FloatingPointError("non-finite coefficient in relaxation")
    return AffineBoundPair(Psi=lam_l, alpha=c_l, Phi=lam_u, beta=c_u, domain=domain)


def make_clip_network(K, lo, hi) -> MlpNetwork:
    """Exact network for ``clip(K x, lo, hi)``.

    Uses ``clip(y) = lo + relu(y - lo) - relu(y - hi)`` with one hidden layer of
    width ``2 * n_u``.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    n_u = K.shape[0]
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n_u,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n_u,))
    if np.any(lo >= hi):
        raise ValueError(f"clip limits must satisfy lo < hi, got {lo} and {hi}")
    eye = np.eye(n_u)
    hidden = Layer(np.vstack([K, K]), np.concatenate([-lo, -hi]), "relu")
    out = Layer(np.hstack([eye, -eye]), lo.copy(), "linear")
    return MlpNetwork([hidden, out])


def linear_network(W, b) -> MlpNetwork:
    """Single affine layer ``W x + b``; handy for constant and zero policies."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    return MlpNetwork([Layer(W, np.asarray(b, dtype=float), "linear")])


def random_network(rng: np.random.Generator, input_dim: int, hidden: Sequence[int], output_dim: int,
                   scale: float = 1.0) -> MlpNetwork:
    dims = [input_dim, *hidden, output_dim]
    layers = []
    for i, (n_in, n_out) in enumerate(zip(dims, dims[1:])):
        act = "linear" if i == len(dims) - 2 else "relu"
        w = rng.normal(scale=scale / np.sqrt(n_in), size=(n_out, n_in))
        b = rng.normal(scale=0.5 * scale, size=n_out)
        layers.append(Layer(w, b, act))
    return MlpNetwork(layers)


# ---------------------------------------------------------------- serialization

def network_to_dict(net: MlpNetwork) -> dict:
    return {
        "version": NETWORK_FORMAT_VERSION,
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "layers": [
            {
                "weight": layer.weight.tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }


def network_from_dict(doc: dict) -> MlpNetwork:
    try:
        version = doc["version"]
        if version != NETWORK_FORMAT_VERSION:
            raise ValueError(f"unsupported network format version {version!r}")
        layers = []
        for entry in doc["layers"]:
            w = np.array(entry["weight"], dtype=float)
            if w.ndim != 2:
                w = w.reshape(len(entry["bias"]), -1)
            layers.append(Layer(w, entry["bias"], entry["activation"]))
        net = MlpNetwork(layers)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed network document: {exc}") from exc
    if net.input_dim != doc["input_dim"] or net.output_dim != doc["output_dim"]:
        raise ValueError("declared input_dim/output_dim disagree with the layer shapes")
    return net


def dumps_network(net: MlpNetwork) -> str:
    return json.dumps(network_to_dict(net), indent=2) + "\n"


def loads_network(text: str) -> MlpNetwork:
    return network_from_dict(json.loads(text))


def save_network(net: MlpNetwork, path) -> None:
    Path(path).write_text(dumps_network(net))


def load_network(path) -> MlpNetwork:
    return loads_network(Path(path).read_text())
