"""Feed-forward policy networks loaded from JSON weight files.

File format::

    {"layers": [{"w": [[...], ...], "b": [...], "act": "relu"}, ...,
                {"w": ..., "b": ..., "act": "tanh"}],
     "scale": 1.0}

``w`` is row-major with shape ``out x in``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ACTIVATIONS = {
    "relu": lambda x: np.maximum(x, 0.0),
    "tanh": np.tanh,
    "identity": lambda x: x,
}


class MlpError(ValueError):
    """Malformed weight file; ``layer`` is the 0-based index of the offending layer, if any."""

    def __init__(self, message: str, layer: int | None = None):
        super().__init__(message if layer is None else f"layer {layer}: {message}")
        self.layer = layer


@dataclass(frozen=True, eq=False)
class Layer:
    w: np.ndarray
    b: np.ndarray
    act: str

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Layer)
            and self.act == other.act
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.b, other.b)
        )


@dataclass(frozen=True)
class MlpPolicy:
    layers: tuple
    scale: float = 1.0
    input_dim: int = 3

    def __post_init__(self):
        if not self.layers:
            raise MlpError("at least one layer is required")
        prev = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.act not in ACTIVATIONS:
                raise MlpError(f"unknown activation {layer.act!r}", i)
            if layer.w.ndim != 2:
                raise MlpError("weight must be a matrix", i)
            if layer.w.shape[1] != prev:
                raise MlpError(f"dimension mismatch: expects {layer.w.shape[1]} inputs, previous layer gives {prev}", i)
            if layer.b.shape != (layer.w.shape[0],):
                raise MlpError(f"bias has shape {layer.b.shape}, expected ({layer.w.shape[0]},)", i)
            prev = layer.w.shape[0]
        if prev != 1:
            raise MlpError(f"output dimension must be 1, got {prev}", len(self.layers) - 1)

    def forward_batch(self, obs) -> np.ndarray:
        h = np.asarray(obs, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise ValueError(f"observations must have shape (n, {self.input_dim})")
        for layer in self.layers:
            h = ACTIVATIONS[layer.act](h @ layer.w.T + layer.b)
        return self.scale * h[:, 0]

    def forward(self, obs: Sequence[float]) -> float:
        return float(self.forward_batch(np.asarray(obs, dtype=np.float64)[None, :])[0])

    def to_dict(self) -> dict:
        return {
            "layers": [{"w": l.w.tolist(), "b": l.b.tolist(), "act": l.act} for l in self.layers],
            "scale": self.scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MlpPolicy":
        if not isinstance(data, dict) or not isinstance(data.get("layers"), list):
            raise MlpError("expected an object with a 'layers' list")
        layers = []
        for i, spec in enumerate(data["layers"]):
            try:
                w = np.array(spec["w"], dtype=np.float64)
                b = np.array(spec["b"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as exc:
                raise MlpError(f"bad weights ({exc})", i) from None
            layers.append(Layer(w, b, spec.get("act", "relu" if i < len(data["layers"]) - 1 else "tanh")))
        return cls(tuple(layers), float(data.get("scale", 1.0)))


def forward(p: MlpPolicy, obs: Sequence[float]) -> float:
    return p.forward(obs)


def load_weights(path) -> MlpPolicy:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MlpError(f"{path}: not valid JSON ({exc})") from None
    return MlpPolicy.from_dict(data)


def save_weights(path, p: MlpPolicy) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(p.to_dict(), fh)
