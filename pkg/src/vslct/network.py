"""Two-layer ReLU MLP with FiLM conditioning, in plain numpy.

Architecture: input -> dense -> ReLU -> dense -> ReLU -> FiLM -> dense
-> 2 logits.  The FiLM block maps the conditioning vector through its own
small network (dense -> ReLU -> dense) to a per-feature shift mu (and,
in affine mode, a scale sigma = 1 + raw) applied to the penultimate
activation f as sigma * f + mu.

The default is additive-only conditioning with the FiLM output layer
zero-initialized, so a freshly initialized model ignores its conditioning
input entirely and training starts from an unconditioned network.

Forward/backward are written by hand so the package has no autodiff
dependency; gradients are verified against finite differences in tests.

Checkpoints are JSON with every float stored via `float.hex()`, making
save/load round trips bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from vslct._util import atomic_write_text, floats_from_hex, floats_to_hex
from vslct.losses import sigmoid

__all__ = [
    "ModelConfig",
    "MlpFilmModel",
    "OptimizerState",
    "count_film_weights",
    "clip_global_norm",
    "sgd_step",
    "save_checkpoint",
    "load_checkpoint",
    "minority_score",
]


@dataclass(frozen=True)
class ModelConfig:
    """Static shape/behavior description of an MLP-with-FiLM model."""

    input_dim: int
    cond_dim: int = 1
    trunk_widths: tuple[int, int] = (64, 64)
    film_hidden: int = 128
    film_affine: bool = False
    film_zero_init: bool = True

    def __post_init__(self):
        object.__setattr__(self, "trunk_widths", tuple(int(w) for w in self.trunk_widths))
        if self.input_dim < 1 or self.cond_dim < 1 or self.film_hidden < 1:
            raise ValueError(f"dimensions must be >= 1: {self}")
        if len(self.trunk_widths) != 2 or any(w < 1 for w in self.trunk_widths):
            raise ValueError(f"trunk_widths must be two sizes >= 1, got {self.trunk_widths}")

    @property
    def film_out_dim(self) -> int:
        mult = 2 if self.film_affine else 1
        return mult * self.trunk_widths[1]


def count_film_weights(config: ModelConfig) -> int:
    """Number of weight entries (biases excluded) in the FiLM block."""
    return config.cond_dim * config.film_hidden + config.film_hidden * config.film_out_dim


class MlpFilmModel:
    """Bundles a ModelConfig with its parameter arrays.

    Parameters live in a plain dict of float64 arrays keyed by layer name;
    the fixed key order of PARAM_KEYS defines iteration order everywhere
    (initialization draws, clipping, checkpoints), which keeps runs
    reproducible.
    """

    PARAM_KEYS = (
        "trunk0_w",
        "trunk0_b",
        "trunk1_w",
        "trunk1_b",
        "film0_w",
        "film0_b",
        "film1_w",
        "film1_b",
        "head_w",
        "head_b",
    )

    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray]):
        missing = set(self.PARAM_KEYS) - set(params)
        if missing:
            raise ValueError(f"missing parameter arrays: {sorted(missing)}")
        self.config = config
        self.params = {k: np.asarray(params[k], dtype=np.float64) for k in self.PARAM_KEYS}

    @classmethod
    def init(cls, config: ModelConfig, rng: np.random.Generator) -> "MlpFilmModel":
        """He-initialized weights, zero biases.

        With config.film_zero_init the FiLM output weights start at zero,
        so mu = 0 (and sigma = 1 in affine mode): the conditioning input
        has no effect until training moves those weights.
        """
        w1, w2 = config.trunk_widths

        def he(fan_in: int, shape) -> np.ndarray:
            return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)

        params = {
            "trunk0_w": he(config.input_dim, (config.input_dim, w1)),
            "trunk0_b": np.zeros(w1),
            "trunk1_w": he(w1, (w1, w2)),
            "trunk1_b": np.zeros(w2),
            "film0_w": he(config.cond_dim, (config.cond_dim, config.film_hidden)),
            "film0_b": np.zeros(config.film_hidden),
            "film1_w": (
                np.zeros((config.film_hidden, config.film_out_dim))
                if config.film_zero_init
                else he(config.film_hidden, (config.film_hidden, config.film_out_dim))
            ),
            "film1_b": np.zeros(config.film_out_dim),
            "head_w": he(w2, (w2, 2)),
            "head_b": np.zeros(2),
        }
        return cls(config, params)

    def copy(self) -> "MlpFilmModel":
        return MlpFilmModel(self.config, {k: v.copy() for k, v in self.params.items()})

    # -- forward / backward -------------------------------------------------

    def forward(self, x: np.ndarray, cond: np.ndarray) -> tuple[np.ndarray, dict]:
        """Logits of shape (n, 2) plus the cache consumed by backward.

        x: (n, input_dim); cond: (n, cond_dim).
        """
        p = self.params
        x = np.asarray(x, dtype=np.float64)
        cond = np.asarray(cond, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.config.input_dim:
            raise ValueError(f"x must have shape (n, {self.config.input_dim}), got {x.shape}")
        if cond.ndim != 2 or cond.shape != (x.shape[0], self.config.cond_dim):
            raise ValueError(f"cond must have shape ({x.shape[0]}, {self.config.cond_dim}), got {cond.shape}")
        h0 = np.maximum(x @ p["trunk0_w"] + p["trunk0_b"], 0.0)
        h1 = np.maximum(h0 @ p["trunk1_w"] + p["trunk1_b"], 0.0)
        g = np.maximum(cond @ p["film0_w"] + p["film0_b"], 0.0)
        film_out = g @ p["film1_w"] + p["film1_b"]
        c = self.config.trunk_widths[1]
        mu = film_out[:, :c]
        sigma = 1.0 + film_out[:, c:] if self.config.film_affine else None
        hmod = (sigma * h1 if sigma is not None else h1) + mu
        logits = hmod @ p["head_w"] + p["head_b"]
        cache = {"x": x, "cond": cond, "h0": h0, "h1": h1, "g": g, "sigma": sigma, "hmod": hmod}
        return logits, cache

    def backward(self, cache: dict, dlogits: np.ndarray) -> dict[str, np.ndarray]:
        """Parameter gradients of an objective whose logit gradient is dlogits.

        dlogits must already carry any batch averaging; backward is linear.
        """
        p = self.params
        x, cond = cache["x"], cache["cond"]
        h0, h1, g, sigma, hmod = cache["h0"], cache["h1"], cache["g"], cache["sigma"], cache["hmod"]
        grads: dict[str, np.ndarray] = {}
        grads["head_w"] = hmod.T @ dlogits
        grads["head_b"] = dlogits.sum(axis=0)
        dhmod = dlogits @ p["head_w"].T
        dmu = dhmod
        if sigma is not None:
            dsigma = dhmod * h1
            dfilm_out = np.concatenate([dmu, dsigma], axis=1)
            dh1 = dhmod * sigma
        else:
            dfilm_out = dmu
            dh1 = dhmod
        grads["film1_w"] = g.T @ dfilm_out
        grads["film1_b"] = dfilm_out.sum(axis=0)
        dg = (dfilm_out @ p["film1_w"].T) * (g > 0.0)
        grads["film0_w"] = cond.T @ dg
        grads["film0_b"] = dg.sum(axis=0)
        dpre1 = dh1 * (h1 > 0.0)
        grads["trunk1_w"] = h0.T @ dpre1
        grads["trunk1_b"] = dpre1.sum(axis=0)
        dpre0 = (dpre1 @ p["trunk1_w"].T) * (h0 > 0.0)
        grads["trunk0_w"] = x.T @ dpre0
        grads["trunk0_b"] = dpre0.sum(axis=0)
        return grads

    def scores(self, x: np.ndarray, cond: np.ndarray) -> np.ndarray:
        """Minority-class softmax probability of each row."""
        logits, _ = self.forward(x, cond)
        return minority_score(logits)


def minority_score(logits: np.ndarray) -> np.ndarray:
    """Softmax probability of class 1 from (n, 2) logits: sigmoid(z1 - z0)."""
    logits = np.asarray(logits, dtype=np.float64)
    return sigmoid(logits[:, 1] - logits[:, 0])


# -- optimization -----------------------------------------------------------


@dataclass
class OptimizerState:
    """Momentum buffers, one per parameter array."""

    velocities: dict[str, np.ndarray]

    @classmethod
    def zeros_like(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(velocities={k: np.zeros_like(v) for k, v in params.items()})


def clip_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> tuple[dict[str, np.ndarray], float]:
    """Scale all gradients jointly so their global L2 norm is at most max_norm.

    Returns (possibly scaled gradients, pre-clip norm).  Gradients under
    the limit are returned unmodified so clipping is exactly inactive.
    """
    if max_norm <= 0.0:
        raise ValueError(f"max_norm must be > 0, got {max_norm}")
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total <= max_norm:
        return grads, total
    scale = max_norm / total
    return {k: g * scale for k, g in grads.items()}, total


def sgd_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
    momentum: float,
    clip_norm: float | None = None,
) -> float:
    """One SGD-with-momentum update, in place; returns the pre-clip gradient norm.

    Order of operations: clip to the global-norm budget first, then fold
    into the velocity v <- momentum * v + g and move p <- p - lr * v.
    """
    if lr <= 0.0:
        raise ValueError(f"lr must be > 0, got {lr}")
    if not 0.0 <= momentum < 1.0:
        raise ValueError(f"momentum must lie in [0, 1), got {momentum}")
    if clip_norm is not None:
        grads, norm = clip_global_norm(grads, clip_norm)
    else:
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    for k in params:
        v = state.velocities[k]
        v *= momentum
        v += grads[k]
        params[k] -= lr * v
    return norm


# -- checkpoints ------------------------------------------------------------


def _array_to_hex(a: np.ndarray) -> dict:
    return {"shape": list(a.shape), "data": floats_to_hex(a)}


def _array_from_hex(obj: dict) -> np.ndarray:
    return floats_from_hex(obj["data"]).reshape(obj["shape"])


def save_checkpoint(path, model: MlpFilmModel, meta: dict | None = None) -> None:
    """Serialize config + parameters as JSON, atomically; floats as hex."""
    payload = {
        "config": asdict(model.config),
        "params": {k: _array_to_hex(v) for k, v in model.params.items()},
        "meta": meta or {},
    }
    atomic_write_text(path, json.dumps(payload))


def load_checkpoint(path) -> tuple[MlpFilmModel, dict]:
    """Inverse of :func:`save_checkpoint`; returns (model, meta)."""
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    try:
        cfg_dict = dict(payload["config"])
        cfg_dict["trunk_widths"] = tuple(cfg_dict["trunk_widths"])
        config = ModelConfig(**cfg_dict)
        params = {k: _array_from_hex(v) for k, v in payload["params"].items()}
        meta = payload.get("meta", {})
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: not a valid checkpoint: {exc}") from exc
    return MlpFilmModel(config, params), meta
