"""Three-layer tanh perceptron trained with Levenberg-Marquardt.

Parameters are flattened as [W1 (hidden x inputs, row-major), b1, W2
(outputs x hidden, row-major), b2]; the JSON model file stores the same
arrays under hidden_w, hidden_b, out_w, out_b.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .codes import Codebook
from .errors import (
    DimensionMismatch, InvalidGamma, MixedSignatures, NonFiniteLoss, ShapeMismatch, SingularNormalEquations,
    UnknownLabel,
)
from .imaging import _atomic_write


@dataclass(frozen=True, eq=False)
class MlpModel:
    hidden_w: np.ndarray
    hidden_b: np.ndarray
    out_w: np.ndarray
    out_b: np.ndarray
    codebook_ref: str = ""

    def __post_init__(self):
        for name in ("hidden_w", "hidden_b", "out_w", "out_b"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise NonFiniteLoss(f"{name} contains non-finite weights")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        h, i = self.hidden_w.shape
        o = self.out_w.shape[0]
        if self.hidden_b.shape != (h,) or self.out_w.shape != (o, h) or self.out_b.shape != (o,):
            raise DimensionMismatch("inconsistent layer shapes")

    @property
    def sizes(self) -> tuple[int, int, int]:
        return (self.hidden_w.shape[1], self.hidden_w.shape[0], self.out_w.shape[0])

    @property
    def n_params(self) -> int:
        i, h, o = self.sizes
        return h * i + h + o * h + o

    def flat(self) -> np.ndarray:
        return np.concatenate([self.hidden_w.ravel(), self.hidden_b, self.out_w.ravel(), self.out_b])

    @classmethod
    def from_flat(cls, sizes, theta: np.ndarray, codebook_ref: str = "") -> "MlpModel":
        i, h, o = sizes
        a = h * i
        b = a + h
        c = b + o * h
        return cls(theta[:a].reshape(h, i), theta[a:b], theta[b:c].reshape(o, h), theta[c:], codebook_ref)

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        return self.sizes == other.sizes and np.array_equal(self.flat(), other.flat())

    def to_json(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "hidden_w": self.hidden_w.tolist(),
            "hidden_b": self.hidden_b.tolist(),
            "out_w": self.out_w.tolist(),
            "out_b": self.out_b.tolist(),
            "activation": "tanh",
            "codebook-ref": self.codebook_ref,
        }

    @classmethod
    def from_json(cls, d: dict) -> "MlpModel":
        if d.get("activation", "tanh") != "tanh":
            raise ValueError(f"unsupported activation {d['activation']!r}")
        i, h, o = d["sizes"]
        m = cls(np.array(d["hidden_w"], dtype=np.float64).reshape(h, i), np.array(d["hidden_b"], dtype=np.float64),
                np.array(d["out_w"], dtype=np.float64).reshape(o, h), np.array(d["out_b"], dtype=np.float64),
                d.get("codebook-ref", ""))
        return m

    def save(self, path) -> None:
        _atomic_write(Path(path), json.dumps(self.to_json()).encode("ascii"))

    @classmethod
    def load(cls, path) -> "MlpModel":
        return cls.from_json(json.loads(Path(path).read_text()))


def init_model(sizes, rng: np.random.Generator, init_range: float = 0.5) -> MlpModel:
    """Uniform weights in [-r, r] / sqrt(fan_in), biases included."""
    i, h, o = sizes
    s1 = init_range / math.sqrt(i)
    s2 = init_range / math.sqrt(h)
    return MlpModel(rng.uniform(-s1, s1, (h, i)), rng.uniform(-s1, s1, h),
                    rng.uniform(-s2, s2, (o, h)), rng.uniform(-s2, s2, o))


def _forward(model: MlpModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    H = np.tanh(X @ model.hidden_w.T + model.hidden_b)
    A = np.tanh(H @ model.out_w.T + model.out_b)
    return H, A


def forward(model: MlpModel, x) -> np.ndarray:
    """Network output for one vector or a batch of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.sizes[0]:
        raise DimensionMismatch(f"input has {x.shape[-1]} components, model expects {model.sizes[0]}")
    return _forward(model, x)[1]


def mse(targets, outputs) -> float:
    t = np.asarray(targets, dtype=np.float64)
    a = np.asarray(outputs, dtype=np.float64)
    if t.shape != a.shape:
        raise ShapeMismatch(f"targets {t.shape} vs outputs {a.shape}")
    if not t.size:
        return 0.0
    return float(np.mean((t - a) ** 2))


def msereg(targets, outputs, weights, gamma: float) -> float:
    if not (0.0 <= gamma <= 1.0):
        raise InvalidGamma(f"gamma {gamma} outside [0, 1]")
    w = np.asarray(weights, dtype=np.float64).ravel()
    msw = float(np.mean(w**2)) if w.size else 0.0
    return gamma * mse(targets, outputs) + (1.0 - gamma) * msw


def jacobian(model: MlpModel, X: np.ndarray) -> np.ndarray:
    """d output / d parameters, one row per (sample, output) in C order."""
    X = np.asarray(X, dtype=np.float64)
    i, h, o = model.sizes
    n = X.shape[0]
    H, A = _forward(model, X)
    dA = 1.0 - A**2                       # (n, o)
    dH = 1.0 - H**2                       # (n, h)
    J = np.zeros((n, o, model.n_params))
    # hidden layer: d a_o / d z1_j = dA_o * W2_oj * dH_j
    G = dA[:, :, None] * model.out_w[None, :, :] * dH[:, None, :]   # (n, o, h)
    J[:, :, : h * i] = (G[:, :, :, None] * X[:, None, None, :]).reshape(n, o, h * i)
    J[:, :, h * i: h * i + h] = G
    off = h * i + h
    # output layer: only the unit's own weights are nonzero
    for k in range(o):
        J[:, k, off + k * h: off + (k + 1) * h] = dA[:, k, None] * H
        J[:, k, off + o * h + k] = dA[:, k]
    return J.reshape(n * o, model.n_params)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    gamma: float = 1.0          # 1.0 = plain MSE; < 1 = MSEREG
    mu0: float = 1e-3
    beta: float = 10.0
    mu_max: float = 1e10
    retries: int = 5
    init_range: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise InvalidGamma(f"gamma {self.gamma} outside [0, 1]")
        if self.epochs < 0 or self.mu0 <= 0 or self.beta <= 1:
            raise ValueError("need epochs >= 0, mu0 > 0, beta > 1")

    @property
    def regularized(self) -> bool:
        return self.gamma < 1.0


@dataclass
class TrainResult:
    model: MlpModel
    curve: list[float] = field(default_factory=list)   # objective after each epoch, curve[0] at init
    accepted: int = 0

    @property
    def objective(self) -> float:
        return self.curve[-1]


def objective(model: MlpModel, X, T, gamma: float) -> float:
    A = forward(model, X)
    if gamma >= 1.0:
        return mse(T, A)
    return msereg(T, A, model.flat(), gamma)


def train_lm(X, T, cfg: TrainConfig = TrainConfig(), hidden: int | None = None,
             model: MlpModel | None = None, codebook_ref: str = "") -> TrainResult:
    """Levenberg-Marquardt; every epoch is one accepted step or a damping escalation.

    The regularized objective gamma*MSE + (1-gamma)*mean(w^2) enters the normal
    equations as  (gamma JᵀJ + (1-gamma)(N/n) I + mu I) dw = gamma Jᵀr - (1-gamma)(N/n) w,
    with N the number of residuals and n the number of parameters.
    """
    X = np.asarray(X, dtype=np.float64)
    T = np.asarray(T, dtype=np.float64)
    if X.ndim != 2 or T.ndim != 2 or X.shape[0] != T.shape[0] or X.shape[0] < 1:
        raise ShapeMismatch(f"data {X.shape} and targets {T.shape} are incompatible")
    if model is None:
        if hidden is None:
            raise ValueError("need either an initial model or a hidden size")
        model = init_model((X.shape[1], hidden, T.shape[1]), np.random.default_rng(cfg.seed), cfg.init_range)
    model = replace(model, codebook_ref=codebook_ref or model.codebook_ref)
    sizes = model.sizes
    if sizes[0] != X.shape[1] or sizes[2] != T.shape[1]:
        raise DimensionMismatch(f"model {sizes} does not fit data {X.shape} / targets {T.shape}")

    gamma = cfg.gamma
    theta = model.flat()
    n_res = T.size
    lam = (1.0 - gamma) * n_res / theta.size
    f = objective(model, X, T, gamma)
    if not math.isfinite(f):
        raise NonFiniteLoss("initial objective is not finite")
    curve = [f]
    mu = cfg.mu0
    accepted = 0
    eye = np.eye(theta.size)
    for _ in range(cfg.epochs):
        J = jacobian(model, X)
        r = (T - forward(model, X)).ravel()
        JtJ = J.T @ J
        g = gamma * (J.T @ r) - lam * theta
        A0 = gamma * JtJ + lam * eye
        singular = True
        for _ in range(cfg.retries):
            try:
                step = np.linalg.solve(A0 + mu * eye, g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.isfinite(step).all():
                singular = False
                cand = MlpModel.from_flat(sizes, theta + step, model.codebook_ref) if np.isfinite(theta + step).all() else None
                f_new = objective(cand, X, T, gamma) if cand is not None else math.inf
                if f_new < f:
                    theta, model, f = cand.flat(), cand, f_new
                    mu = max(mu / cfg.beta, 1e-20)
                    accepted += 1
                    break
            mu *= cfg.beta
            if mu > cfg.mu_max:
                if singular:
                    raise SingularNormalEquations(f"normal equations singular up to mu={cfg.mu_max:g}")
                break
        if not math.isfinite(f):
            raise NonFiniteLoss("objective became non-finite")
        assert f <= curve[-1]
        curve.append(f)
        if mu > cfg.mu_max:
            break
    return TrainResult(model, curve, accepted)


@dataclass
class MultiStartResult:
    best: MlpModel
    best_index: int
    results: list[TrainResult]
    failures: list[tuple[int, str]] = field(default_factory=list)

    @property
    def models(self) -> list[MlpModel]:
        return [r.model for r in self.results]

    @property
    def objectives(self) -> list[float]:
        return [r.objective for r in self.results]


def multi_start(X, T, cfg: TrainConfig, starts: int, hidden: int, codebook_ref: str = "") -> MultiStartResult:
    """Train with seeds cfg.seed + 0..starts-1; keep the lowest final objective."""
    if starts < 1:
        raise ValueError("starts must be >= 1")
    results, failures, last_err = [], [], None
    for s in range(starts):
        try:
            results.append(train_lm(X, T, replace(cfg, seed=cfg.seed + s), hidden=hidden, codebook_ref=codebook_ref))
        except (SingularNormalEquations, NonFiniteLoss) as exc:
            failures.append((s, f"{type(exc).__name__}: {exc}"))
            last_err = exc
    if not results:
        raise last_err
    idx = int(np.argmin([r.objective for r in results]))
    return MultiStartResult(results[idx].model, idx, results, failures)


def committee(models, x) -> np.ndarray:
    """Component-wise mean of the members' outputs."""
    models = list(models)
    if not models:
        raise ValueError("committee needs at least one model")
    sig = models[0].sizes
    if any(m.sizes != sig for m in models):
        raise MixedSignatures("committee members have different layer sizes")
    return np.mean([forward(m, x) for m in models], axis=0)


def build_targets(labels, book: Codebook) -> np.ndarray:
    labels = np.asarray(labels, dtype=np.int64).ravel()
    if not labels.size:
        return np.zeros((0, book.bits))
    if labels.min() < 0 or labels.max() >= book.classes:
        raise UnknownLabel(f"labels must lie in 0..{book.classes - 1}")
    return book.targets()[labels]
