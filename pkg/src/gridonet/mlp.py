"""Gated fully-connected network used for both the branch and trunk nets.

Two encoders U and V are mixed through d update gates:

    U = sin(X W1 + b1)          V = sin(X W2 + b2)
    H = X
    for l in 1..d:  Z = sin(H Wz_l + bz_l);  H = (1 - Z) * U + Z * V
    f(X) = H W + b

The first gate maps from the raw input, so Wz_1 is (input_dim, width) and the
remaining gate weights are (width, width). Activation is plain sin throughout;
the final layer is linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T

__all__ = ["MlpConfig", "glorot_init", "forward", "param_shapes"]


@dataclass(frozen=True)
class MlpConfig:
    input_dim: int
    width: int
    depth: int  # number of gate layers
    output_dim: int

    def __post_init__(self):
        for f in ("input_dim", "width", "depth", "output_dim"):
            if getattr(self, f) < 1:
                raise ValueError(f"{f} must be >= 1, got {getattr(self, f)}")


def param_shapes(cfg: MlpConfig, prefix: str = "") -> dict[str, tuple[int, int]]:
    """Parameter names and shapes in fixed insertion order (checkpoint order)."""
    shapes = {
        f"{prefix}u_w": (cfg.input_dim, cfg.width),
        f"{prefix}u_b": (1, cfg.width),
        f"{prefix}v_w": (cfg.input_dim, cfg.width),
        f"{prefix}v_b": (1, cfg.width),
    }
    for l in range(1, cfg.depth + 1):
        fan_in = cfg.input_dim if l == 1 else cfg.width
        shapes[f"{prefix}z{l}_w"] = (fan_in, cfg.width)
        shapes[f"{prefix}z{l}_b"] = (1, cfg.width)
    shapes[f"{prefix}out_w"] = (cfg.width, cfg.output_dim)
    shapes[f"{prefix}out_b"] = (1, cfg.output_dim)
    return shapes


def glorot_init(cfg: MlpConfig, seed, prefix: str = "") -> dict[str, np.ndarray]:
    """Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.

    `seed` may be an int (or seed sequence) or an already-built Generator, so
    composite models can hand one stream through several sub-inits.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = {}
    for name, (rows, cols) in param_shapes(cfg, prefix).items():
        if name.endswith("_b"):
            params[name] = np.zeros((rows, cols))
        else:
            limit = np.sqrt(6.0 / (rows + cols))
            params[name] = rng.uniform(-limit, limit, size=(rows, cols))
    return params


def hidden(params: dict, x, cfg: MlpConfig, prefix: str = ""):
    """Gated recurrence up to H^(d+1), before the final linear layer."""

    def lin(v, stem):
        return T.add_bias(T.matmul(v, params[f"{prefix}{stem}_w"]), params[f"{prefix}{stem}_b"])

    u = T.sin(lin(x, "u"))
    v = T.sin(lin(x, "v"))
    h = x if isinstance(x, T.Tensor) else T.Tensor(x)
    for l in range(1, cfg.depth + 1):
        z = T.sin(lin(h, f"z{l}"))
        h = (1.0 - z) * u + z * v
    return h


def head(params: dict, h, prefix: str = "", stem: str = "out"):
    """Final linear layer applied to a hidden state."""
    return T.add_bias(T.matmul(h, params[f"{prefix}{stem}_w"]), params[f"{prefix}{stem}_b"])


def forward(params: dict, x, cfg: MlpConfig, prefix: str = ""):
    """Full network: gated recurrence plus the linear output layer."""
    return head(params, hidden(params, x, cfg, prefix), prefix)
