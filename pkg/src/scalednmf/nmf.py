"""Non-negative matrix factorization under the beta-divergence family.

Minimizes the component-wise loss sum(L(M_ij, (WH)_ij)) over non-negative
factors W (docs x k) and H (k x terms) with multiplicative updates.  The named
losses and their beta values:

    frobenius          beta=2   L(x, y) = (x - y)^2
    kullback-leibler   beta=1   L(x, y) = x log(x / y)
    itakura-saito      beta=0   L(x, y) = x / y - log(x / y) - 1

Scaling x and y jointly by alpha multiplies these by alpha^2, alpha, and 1
respectively, which is why the choice of matrix scaling interacts with the
choice of loss.  No regularization terms are applied.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError, NumericalError

__all__ = [
    "LossKind",
    "FROBENIUS",
    "KULLBACK_LEIBLER",
    "ITAKURA_SAITO",
    "InitKind",
    "NmfConfig",
    "NmfModel",
    "component_loss",
    "objective",
    "initialize",
    "factorize",
    "save_model",
    "load_model",
]

_LOSS_NAMES = {
    "frobenius": 2.0,
    "kullback-leibler": 1.0,
    "kl": 1.0,
    "itakura-saito": 0.0,
    "is": 0.0,
}


@dataclass(frozen=True)
class LossKind:
    """A beta-divergence loss; the named kinds are beta = 2, 1, 0."""

    beta: float

    @classmethod
    def parse(cls, spec: "LossKind | str | float") -> "LossKind":
        if isinstance(spec, LossKind):
            return spec
        if isinstance(spec, str):
            key = spec.strip().lower()
            if key in _LOSS_NAMES:
                return cls(_LOSS_NAMES[key])
            try:
                return cls(float(key))
            except ValueError:
                valid = ", ".join(sorted(set(_LOSS_NAMES)))
                raise ValueError(f"unknown loss {spec!r} (expected {valid} or a beta value)") from None
        return cls(float(spec))

    @property
    def name(self) -> str:
        if self.beta == 2.0:
            return "frobenius"
        if self.beta == 1.0:
            return "kullback-leibler"
        if self.beta == 0.0:
            return "itakura-saito"
        return f"beta={self.beta:g}"


FROBENIUS = LossKind(2.0)
KULLBACK_LEIBLER = LossKind(1.0)
ITAKURA_SAITO = LossKind(0.0)


class InitKind(Enum):
    SEEDED_RANDOM = "random"
    NNDSVDA = "nndsvda"


@dataclass(frozen=True)
class NmfConfig:
    """Solver configuration; fully determines the factorization of a matrix."""

    rank: int
    loss: LossKind = FROBENIUS
    max_iter: int = 200
    tol: float = 1e-4
    seed: int = 0
    init: InitKind = InitKind.SEEDED_RANDOM
    epsilon: float = 1e-12
    # reserved knobs; nonzero values are rejected until regularized updates exist
    l1_reg: float = 0.0
    l2_reg: float = 0.0

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be a positive integer")
        if self.max_iter < 1:
            raise ValueError("max_iter must be a positive integer")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.l1_reg != 0.0 or self.l2_reg != 0.0:
            raise ValueError("regularization is not supported; l1_reg and l2_reg must be 0")

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "loss": self.loss.name,
            "beta": self.loss.beta,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "seed": self.seed,
            "init": self.init.value,
            "epsilon": self.epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NmfConfig":
        return cls(
            rank=int(d["rank"]),
            loss=LossKind(float(d["beta"])),
            max_iter=int(d["max_iter"]),
            tol=float(d["tol"]),
            seed=int(d["seed"]),
            init=InitKind(d["init"]),
            epsilon=float(d["epsilon"]),
        )


@dataclass
class NmfModel:
    """Factorization result with the objective trace."""

    W: np.ndarray
    H: np.ndarray
    config: NmfConfig
    objective_history: list[float]
    converged: bool
    residual_norm: float

    @property
    def n_iter(self) -> int:
        return len(self.objective_history)


def component_loss(x, y, loss: LossKind | str | float):
    """Pointwise loss L(x, y); accepts scalars or same-shaped arrays.

    For the Kullback-Leibler kind, x = 0 contributes 0 by convention.
    """
    loss = LossKind.parse(loss)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if loss.beta == 2.0:
        out = (x - y) ** 2
        return float(out) if out.ndim == 0 else out
    if np.any(y <= 0):
        raise ValueError(f"{loss.name} loss requires y > 0")
    with np.errstate(divide="ignore", invalid="ignore"):
        if loss.beta == 1.0:
            out = np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0) / y), 0.0)
        elif loss.beta == 0.0:
            ratio = x / y
            out = ratio - np.log(ratio) - 1.0
        else:
            b = loss.beta
            out = (x**b + (b - 1.0) * y**b - b * x * y ** (b - 1.0)) / (b * (b - 1.0))
    return float(out) if out.ndim == 0 else out


def objective(M, W: np.ndarray, H: np.ndarray, loss: LossKind | str | float, epsilon: float = 1e-12) -> float:
    """Total loss sum_ij L(M_ij, (WH)_ij) with the model floored at epsilon.

    The floor is not applied for the Frobenius loss, which is defined at 0.
    """
    loss = LossKind.parse(loss)
    A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    Y = W @ H
    if loss.beta != 2.0:
        Y = np.maximum(Y, epsilon)
    return float(np.sum(component_loss(A, Y, loss)))


def _as_dense_nonneg(M) -> np.ndarray:
    A = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    if A.ndim != 2:
        raise DataError("expected a 2-d matrix")
    if not np.all(np.isfinite(A)):
        raise DataError("matrix entries must be finite")
    if np.any(A < 0):
        raise DataError("matrix entries must be non-negative")
    if np.any(A.sum(axis=1) == 0) or np.any(A.sum(axis=0) == 0):
        raise DataError("matrix must have no all-zero rows or columns")
    return A


def _nndsvda(A: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Non-negative double SVD init, zeros filled with the matrix mean."""
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    n, m = A.shape
    W = np.zeros((n, k))
    H = np.zeros((k, m))
    W[:, 0] = math.sqrt(S[0]) * np.abs(U[:, 0])
    H[0, :] = math.sqrt(S[0]) * np.abs(Vt[0, :])
    for j in range(1, k):
        x, y = U[:, j], Vt[j, :]
        xp, xn = np.maximum(x, 0.0), np.maximum(-x, 0.0)
        yp, yn = np.maximum(y, 0.0), np.maximum(-y, 0.0)
        pos = np.linalg.norm(xp) * np.linalg.norm(yp)
        neg = np.linalg.norm(xn) * np.linalg.norm(yn)
        if pos >= neg and pos > 0:
            u, v, sigma = xp / np.linalg.norm(xp), yp / np.linalg.norm(yp), pos
        elif neg > 0:
            u, v, sigma = xn / np.linalg.norm(xn), yn / np.linalg.norm(yn), neg
        else:
            continue
        W[:, j] = math.sqrt(S[j] * sigma) * u
        H[j, :] = math.sqrt(S[j] * sigma) * v
    avg = A.mean()
    W[W <= 0] = avg
    H[H <= 0] = avg
    return W, H


def initialize(M, config: NmfConfig) -> tuple[np.ndarray, np.ndarray]:
    """Strictly positive starting factors, fully determined by the config."""
    A = _as_dense_nonneg(M)
    n, m = A.shape
    k = config.rank
    if k > min(n, m):
        raise ValueError(f"rank {k} exceeds min(n, m) = {min(n, m)}")
    if config.init is InitKind.NNDSVDA:
        W, H = _nndsvda(A, k)
    else:
        rng = np.random.default_rng(config.seed)
        scale = math.sqrt(A.mean() / k)
        W = rng.random((n, k)) * scale
        H = rng.random((k, m)) * scale
    # multiplicative updates cannot move a coordinate off an exact zero
    tiny = np.finfo(np.float64).tiny
    return np.maximum(W, tiny), np.maximum(H, tiny)


def _update_once(A, W, H, beta: float, eps: float) -> tuple[np.ndarray, np.ndarray]:
    if beta == 2.0:
        H = H * (W.T @ A) / ((W.T @ W) @ H + eps)
        W = W * (A @ H.T) / (W @ (H @ H.T) + eps)
    elif beta == 1.0:
        H = H * (W.T @ (A / (W @ H + eps))) / (W.sum(axis=0)[:, None] + eps)
        W = W * ((A / (W @ H + eps)) @ H.T) / (H.sum(axis=1)[None, :] + eps)
    else:
        Y = W @ H + eps
        H = H * (W.T @ (Y ** (beta - 2.0) * A)) / (W.T @ Y ** (beta - 1.0) + eps)
        Y = W @ H + eps
        W = W * ((Y ** (beta - 2.0) * A) @ H.T) / (Y ** (beta - 1.0) @ H.T + eps)
    return W, H


def factorize(M, config: NmfConfig) -> NmfModel:
    """Factor ``M`` into non-negative W @ H under the configured loss.

    Alternates the multiplicative update for H then W and records the
    objective after each sweep; stops once the relative objective change
    drops below ``config.tol`` or ``config.max_iter`` sweeps have run.
    Identical inputs produce bit-identical models.
    """
    A = _as_dense_nonneg(M)
    W, H = initialize(A, config)
    eps = config.epsilon
    beta = config.loss.beta
    history: list[float] = []
    converged = False
    for _ in range(config.max_iter):
        W, H = _update_once(A, W, H, beta, eps)
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(H))):
            raise NumericalError("non-finite entries in NMF factors")
        obj = objective(A, W, H, config.loss, eps)
        history.append(obj)
        if len(history) >= 2 and math.isfinite(history[-2]) and math.isfinite(obj):
            denom = max(abs(history[-2]), np.finfo(np.float64).tiny)
            if abs(history[-2] - obj) / denom < config.tol:
                converged = True
                break
    residual = float(np.linalg.norm(A - W @ H))
    return NmfModel(
        W=W,
        H=H,
        config=config,
        objective_history=history,
        converged=converged,
        residual_norm=residual,
    )


def _write_block(lines: list[str], name: str, mat: np.ndarray) -> None:
    lines.append(f"{name} {mat.shape[0]} {mat.shape[1]}")
    for row in mat:
        lines.append(" ".join(repr(float(v)) for v in row))


def save_model(model: NmfModel, path: str | Path) -> None:
    """Write the model as a JSON header followed by dense W and H blocks."""
    header = {
        "config": model.config.to_dict(),
        "converged": model.converged,
        "objective_history": model.objective_history,
        "residual_norm": model.residual_norm,
    }
    lines = [json.dumps(header, sort_keys=True)]
    _write_block(lines, "W", model.W)
    _write_block(lines, "H", model.H)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _read_block(lines: list[str], pos: int, name: str) -> tuple[np.ndarray, int]:
    tag, n, m = lines[pos].split()
    if tag != name:
        raise DataError(f"expected block {name!r}, found {tag!r}")
    n, m = int(n), int(m)
    rows = [
        np.array(lines[pos + 1 + i].split(), dtype=np.float64) for i in range(n)
    ]
    mat = np.vstack(rows) if rows else np.zeros((0, m))
    if mat.shape != (n, m):
        raise DataError(f"block {name!r} has shape {mat.shape}, header says ({n}, {m})")
    return mat, pos + 1 + n


def load_model(path: str | Path) -> NmfModel:
    """Read a model written by :func:`save_model`."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"{path}: empty model file")
    header = json.loads(lines[0])
    W, pos = _read_block(lines, 1, "W")
    H, _ = _read_block(lines, pos, "H")
    return NmfModel(
        W=W,
        H=H,
        config=NmfConfig.from_dict(header["config"]),
        objective_history=[float(v) for v in header["objective_history"]],
        converged=bool(header["converged"]),
        residual_norm=float(header["residual_norm"]),
    )
