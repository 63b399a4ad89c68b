"""Branch/trunk operator networks.

The operator value at query time y is the inner product of q branch features
(computed from the discretized input function) with q trunk features
(computed from y), plus a trainable output bias tau_o:

    G(u)(y) = sum_i b_i(u) * phi_i(y) + tau_o

The probabilistic variant shares every layer except the final one, which is
split into a mu head and a log-sigma head per net; sigma is recovered with a
clamped exponential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .mlp import MlpConfig, glorot_init, head, hidden

__all__ = [
    "DeepOnetConfig",
    "LOGSIG_LO",
    "LOGSIG_HI",
    "init_vanilla",
    "init_prob",
    "forward_batch",
    "prob_forward_batch",
    "predict",
    "predict_prob",
    "mu_subparams",
    "ensemble_predict",
]

# bounds on the log-sigma channel before exponentiation; sigma stays in
# [4.5e-5, 20] pu, far outside any physical voltage band
LOGSIG_LO = -10.0
LOGSIG_HI = 3.0


@dataclass(frozen=True)
class DeepOnetConfig:
    m: int = 200  # branch sensors
    q: int = 100  # latent feature dimension
    width: int = 100
    depth: int = 3

    def __post_init__(self):
        if self.m < 2 or self.q < 1 or self.width < 1 or self.depth < 1:
            raise ValueError(f"invalid config {self}")

    @property
    def branch(self) -> MlpConfig:
        return MlpConfig(self.m, self.width, self.depth, self.q)

    @property
    def trunk(self) -> MlpConfig:
        return MlpConfig(1, self.width, self.depth, self.q)


def init_vanilla(cfg: DeepOnetConfig, seed) -> dict[str, np.ndarray]:
    """Branch params (b_*), trunk params (t_*), and the output bias tau_o."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = glorot_init(cfg.branch, rng, prefix="b_")
    params.update(glorot_init(cfg.trunk, rng, prefix="t_"))
    params["tau_o"] = np.zeros((1, 1))
    return params


def init_prob(cfg: DeepOnetConfig, seed) -> dict[str, np.ndarray]:
    """Shared layers plus split mu / log-sigma final layers and biases."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = {}
    for prefix, sub in (("b_", cfg.branch), ("t_", cfg.trunk)):
        full = glorot_init(sub, rng, prefix=prefix)
        w, b = full.pop(f"{prefix}out_w"), full.pop(f"{prefix}out_b")
        params.update(full)
        params[f"{prefix}mu_w"] = w
        params[f"{prefix}mu_b"] = b
        limit = np.sqrt(6.0 / (sub.width + sub.output_dim))
        params[f"{prefix}ls_w"] = rng.uniform(-limit, limit, (sub.width, sub.output_dim))
        params[f"{prefix}ls_b"] = np.zeros((1, sub.output_dim))
    params["tau_o_mu"] = np.zeros((1, 1))
    params["tau_o_ls"] = np.zeros((1, 1))
    return params


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a, dtype=float))):
            raise T.NumericError("non-finite network input")


def forward_batch(params: dict, cfg: DeepOnetConfig, U, Y):
    """Paired evaluation: row i of U with row i of Y. Returns a (B, 1) Tensor."""
    bfeat = head(params, hidden(params, U, cfg.branch, "b_"), "b_")
    tfeat = head(params, hidden(params, Y, cfg.trunk, "t_"), "t_")
    return T.sum_rows(bfeat * tfeat) + params["tau_o"]


def prob_forward_batch(params: dict, cfg: DeepOnetConfig, U, Y):
    """Mu and clamped log-sigma channels for paired rows; (B,1) Tensors each."""
    bh = hidden(params, U, cfg.branch, "b_")
    th = hidden(params, Y, cfg.trunk, "t_")
    mu = T.sum_rows(head(params, bh, "b_", "mu") * head(params, th, "t_", "mu"))
    mu = mu + params["tau_o_mu"]
    ls = T.sum_rows(head(params, bh, "b_", "ls") * head(params, th, "t_", "ls"))
    ls = T.clip(ls + params["tau_o_ls"], LOGSIG_LO, LOGSIG_HI)
    return mu, ls


def predict(params: dict, cfg: DeepOnetConfig, u_disc, ys) -> np.ndarray:
    """Operator values at query times ys; branch runs once per input function."""
    u = np.asarray(u_disc, dtype=float).reshape(1, -1)
    y = np.asarray(ys, dtype=float).reshape(-1, 1)
    _check_finite(u, y)
    if u.shape[1] != cfg.m:
        raise ValueError(f"expected {cfg.m} sensors, got {u.shape[1]}")
    bfeat = head(params, hidden(params, T.Tensor(u), cfg.branch, "b_"), "b_")  # (1, q)
    tfeat = head(params, hidden(params, T.Tensor(y), cfg.trunk, "t_"), "t_")  # (k, q)
    out = T.matmul(tfeat, T.Tensor(bfeat.data.T)) + float(np.asarray(params["tau_o"]).item())
    return out.data.ravel()


def predict_prob(params: dict, cfg: DeepOnetConfig, u_disc, ys):
    """(mu, sigma) curves at query times ys; sigma = exp(clamped log-sigma)."""
    u = np.asarray(u_disc, dtype=float).reshape(1, -1)
    y = np.asarray(ys, dtype=float).reshape(-1, 1)
    _check_finite(u, y)
    if u.shape[1] != cfg.m:
        raise ValueError(f"expected {cfg.m} sensors, got {u.shape[1]}")
    bh = hidden(params, T.Tensor(u), cfg.branch, "b_")
    th = hidden(params, T.Tensor(y), cfg.trunk, "t_")
    mu = T.matmul(head(params, th, "t_", "mu"), T.Tensor(head(params, bh, "b_", "mu").data.T))
    mu = mu + float(np.asarray(params["tau_o_mu"]).item())
    ls = T.matmul(head(params, th, "t_", "ls"), T.Tensor(head(params, bh, "b_", "ls").data.T))
    ls = T.clip(ls + float(np.asarray(params["tau_o_ls"]).item()), LOGSIG_LO, LOGSIG_HI)
    return mu.data.ravel(), np.exp(ls.data.ravel())


def mu_subparams(prob_params: dict) -> dict[str, np.ndarray]:
    """Vanilla-layout view of the mu channel (shares arrays, no copies)."""
    out = {}
    for k, v in prob_params.items():
        if k.endswith(("ls_w", "ls_b")) or k == "tau_o_ls":
            continue
        out[k.replace("mu_w", "out_w").replace("mu_b", "out_b")] = v
    out["tau_o"] = out.pop("tau_o_mu")
    return out


def ensemble_predict(members: list[dict], cfg: DeepOnetConfig, u_disc, ys):
    """Pointwise mean and unbiased std over member predictions.

    Returns (mean, std, matrix) with matrix[j] the j-th member's curve.
    """
    if len(members) < 2:
        raise ValueError(f"ensemble needs at least 2 members, got {len(members)}")
    matrix = np.stack([predict(p, cfg, u_disc, ys) for p in members])
    return matrix.mean(axis=0), matrix.std(axis=0, ddof=1), matrix
