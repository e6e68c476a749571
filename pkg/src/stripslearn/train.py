"""Focal-loss training of the trace classifier with exact gradients.

The forward graph is small and fixed, so gradients are derived by hand
rather than through an autodiff framework: backpropagation through the
product-form ORs uses exclusive products, and the stick-breaking
normalization admits an exact linear-time backward scan that needs no
division (and therefore tolerates scores saturated at 0 or 1, which happen
routinely once parameters are clamped to the unit box).

Optimization uses rectified Adam: plain bias-corrected momentum while the
variance rectification term is undefined, the rectified adaptive step
afterwards, and a projection of every parameter back to [0, 1] after each
update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Domain, Trace, classify_trace
from .datagen import Dataset
from .xformer import (KEY, QUERY, VALUE, binarize, boolean_forward, extract_model,
                      forward, invented_atom_names, is_binary)


@dataclass(frozen=True)
class LossConfig:
    """Focal-loss hyperparameters: class weight, focusing exponent, log clip."""

    alpha: float = 0.9
    gamma: float = 3.0
    clip_eps: float = 1e-7

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.gamma < 0.0:
            raise ValueError("gamma must be >= 0")
        if not 0.0 < self.clip_eps < 0.5:
            raise ValueError("clip_eps must be in (0, 0.5)")


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters and loop policy."""

    lr: float = 0.02
    batch_size: int = 8
    max_steps: int = 100_000
    seed: int = 0
    patience: int | None = None
    eval_every: int = 250
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lr <= 0 or self.batch_size < 1 or self.max_steps < 1:
            raise ValueError("lr, batch_size and max_steps must be positive")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1 when set")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("moment decays must be in [0, 1)")


# --------------------------------------------------------------------------
# Loss


def _position_targets(n: int, label: int) -> int:
    """Index of the single inapplicable position, or -1 for positive traces."""
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label}")
    if label == 1 and n < 2:
        raise ValueError("negative traces must have length >= 2")
    return n - 1 if label == 1 else -1


def _focal_terms(y: np.ndarray, label: int, cfg: LossConfig) -> float:
    """Mean per-position focal loss; clipping applies inside logs only."""
    n = y.size
    neg_at = _position_targets(n, label)
    eps = cfg.clip_eps
    pos = y[:neg_at] if neg_at >= 0 else y
    total = -(1.0 - cfg.alpha) * float(
        np.sum(pos ** cfg.gamma * np.log(np.maximum(1.0 - pos, eps))))
    if neg_at >= 0:
        yn = y[neg_at]
        total -= cfg.alpha * (1.0 - yn) ** cfg.gamma * math.log(max(yn, eps))
    return total / n


def trace_loss(theta: np.ndarray, trace: Sequence[int], label: int,
               cfg: LossConfig = LossConfig()) -> float:
    """Focal loss of one labeled trace under the current parameters."""
    return _focal_terms(forward(theta, trace).y, label, cfg)


def batch_loss(theta: np.ndarray, batch: Sequence[tuple[Trace, int]],
               cfg: LossConfig = LossConfig()) -> float:
    """Mean trace loss over a non-empty batch."""
    if not batch:
        raise ValueError("batch must be non-empty")
    return sum(trace_loss(theta, t, label, cfg) for t, label in batch) / len(batch)


def _loss_gradient_wrt_y(y: np.ndarray, label: int, cfg: LossConfig) -> tuple[float, np.ndarray]:
    """Loss value and dL/dy for one trace, honoring the log-argument clips."""
    n = y.size
    neg_at = _position_targets(n, label)
    eps = cfg.clip_eps
    a, g = cfg.alpha, cfg.gamma

    g_y = np.zeros_like(y)
    pos_slice = slice(0, neg_at) if neg_at >= 0 else slice(0, n)
    yp = y[pos_slice]
    log_term = np.log(np.maximum(1.0 - yp, eps))
    inv_term = np.where(1.0 - yp > eps, 1.0 / np.maximum(1.0 - yp, eps), 0.0)
    focus = 0.0 if g == 0.0 else g * yp ** (g - 1.0)
    g_y[pos_slice] = -((1.0 - a) / n) * (focus * log_term - yp ** g * inv_term)
    loss = -((1.0 - a) / n) * float(np.sum(yp ** g * log_term))

    if neg_at >= 0:
        yn = y[neg_at]
        log_n = math.log(max(yn, eps))
        inv_n = 1.0 / yn if yn > eps else 0.0
        focus_n = 0.0 if g == 0.0 else g * (1.0 - yn) ** (g - 1.0)
        g_y[neg_at] = -(a / n) * ((1.0 - yn) ** g * inv_n - focus_n * log_n)
        loss -= (a / n) * (1.0 - yn) ** g * log_n
    return loss, g_y


_TRI_CACHE: dict[int, np.ndarray] = {}


def _strict_lower(n: int) -> np.ndarray:
    mask = _TRI_CACHE.get(n)
    if mask is None:
        mask = np.tri(n, k=-1)
        _TRI_CACHE[n] = mask
    return mask


def _exclusive_prod(one_minus: np.ndarray) -> np.ndarray:
    """Along axis 0: product of all entries except one's own."""
    h = one_minus.shape[0]
    pref = np.ones_like(one_minus)
    suff = np.ones_like(one_minus)
    if h > 1:
        cp = np.cumprod(one_minus, axis=0)
        pref[1:] = cp[:-1]
        cs = np.cumprod(one_minus[::-1], axis=0)[::-1]
        suff[:-1] = cs[1:]
    return pref * suff


def _trace_loss_grad(theta: np.ndarray, idx: np.ndarray, label: int,
                     cfg: LossConfig) -> tuple[float, np.ndarray]:
    """Fused forward pass, focal loss and exact gradient for one trace."""
    n = idx.size
    q = theta[:, idx, QUERY]
    k = theta[:, idx, KEY]
    v = theta[:, idx, VALUE]
    mask = _strict_lower(n)
    s = q[:, :, None] * k[:, None, :]
    s *= mask
    one_minus = 1.0 - s
    suffix = np.ones_like(s)
    if n > 1:
        rev = np.cumprod(one_minus[:, :, ::-1], axis=-1)[:, :, ::-1]
        suffix[:, :, :-1] = rev[:, :, 1:]
    sp = s * suffix
    head = np.einsum("hij,hj->hi", sp, v)
    one_minus_head = 1.0 - head
    y = 1.0 - np.prod(one_minus_head, axis=0)

    loss, g_y = _loss_gradient_wrt_y(y, label, cfg)

    g_head = g_y[None, :] * _exclusive_prod(one_minus_head)
    g_sp = g_head[:, :, None] * v[:, None, :]
    g_v = np.einsum("hi,hij->hj", g_head, sp)

    # Backward scan through the stick-breaking products (division-free).
    g_s = np.empty_like(s)
    carry = np.zeros((s.shape[0], n))
    for j in range(n):
        g_s[:, :, j] = (g_sp[:, :, j] - carry) * suffix[:, :, j]
        carry = g_sp[:, :, j] * s[:, :, j] + carry * one_minus[:, :, j]
    g_s *= mask

    g_q = np.einsum("hij,hj->hi", g_s, k)
    g_k = np.einsum("hij,hi->hj", g_s, q)

    grad = np.zeros_like(theta)
    np.add.at(grad[:, :, QUERY].T, idx, g_q.T)
    np.add.at(grad[:, :, KEY].T, idx, g_k.T)
    np.add.at(grad[:, :, VALUE].T, idx, g_v.T)
    return loss, grad


def grad(theta: np.ndarray, batch: Sequence[tuple[Trace, int]],
         cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Exact gradient of batch_loss with respect to every parameter."""
    loss, g = _batch_loss_grad(theta, batch, cfg)
    return g


def _batch_loss_grad(theta: np.ndarray, batch: Sequence[tuple[Trace, int]],
                     cfg: LossConfig) -> tuple[float, np.ndarray]:
    if not batch:
        raise ValueError("batch must be non-empty")
    total = 0.0
    acc = np.zeros_like(theta)
    for trace, label in batch:
        idx = np.asarray(trace, dtype=np.intp)
        loss, g = _trace_loss_grad(theta, idx, label, cfg)
        total += loss
        acc += g
    return total / len(batch), acc / len(batch)


# --------------------------------------------------------------------------
# Rectified Adam with box projection


@dataclass
class OptState:
    """Step counter plus first and second moment accumulators."""

    step: int
    m: np.ndarray
    v: np.ndarray

    @staticmethod
    def initial(shape: tuple[int, ...]) -> "OptState":
        return OptState(step=0, m=np.zeros(shape), v=np.zeros(shape))


def radam_step(state: OptState, theta: np.ndarray, g: np.ndarray,
               cfg: TrainConfig = TrainConfig()) -> tuple[OptState, np.ndarray]:
    """One rectified-Adam update followed by projection onto [0, 1].

    While the rectification term is undefined (the running variance length
    rho_t has not exceeded 4) the update is plain bias-corrected momentum;
    afterwards the adaptive step is scaled by the rectification factor.
    """
    if g.shape != theta.shape or state.m.shape != theta.shape:
        raise ValueError(f"shape mismatch: theta {theta.shape}, grad {g.shape}, "
                         f"moments {state.m.shape}")
    b1, b2 = cfg.beta1, cfg.beta2
    t = state.step + 1
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1 ** t)
    rho_inf = 2.0 / (1.0 - b2) - 1.0
    rho_t = rho_inf - 2.0 * t * b2 ** t / (1.0 - b2 ** t)
    if rho_t > 4.0:
        rect = math.sqrt(((rho_t - 4.0) * (rho_t - 2.0) * rho_inf)
                         / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
        v_hat = np.sqrt(v / (1.0 - b2 ** t))
        update = cfg.lr * rect * m_hat / (v_hat + cfg.adam_eps)
    else:
        update = cfg.lr * m_hat
    new_theta = np.clip(theta - update, 0.0, 1.0)
    return OptState(step=t, m=m, v=v), new_theta


# --------------------------------------------------------------------------
# Training loop and evaluation


@dataclass
class TrainResult:
    """Final parameters, their binarization, history, and the read-off model."""

    theta: np.ndarray
    theta_bar: np.ndarray
    history: list[tuple[int, float, float]]
    train_accuracy: float
    domain: Domain
    steps_run: int
    test_accuracy: float | None = None


def _contract_correct(theta_bar: np.ndarray, trace: Trace, label: int) -> bool:
    """Per-prefix correctness against the single-final-violation contract."""
    flags = boolean_forward(theta_bar, trace).flags
    if label == 0:
        return not any(flags)
    return not any(flags[:-1]) and flags[-1] == 1


def dataset_accuracy(theta_bar: np.ndarray, dataset: Dataset) -> float:
    """Fraction of dataset traces classified correctly at every prefix."""
    if not dataset.items:
        raise ValueError("dataset is empty")
    hits = sum(_contract_correct(theta_bar, t, label) for t, label in dataset.items)
    return hits / len(dataset.items)


def _validate_dataset(dataset: Dataset) -> None:
    if not dataset.items:
        raise ValueError("dataset is empty")
    for trace, label in dataset.items:
        if label == 1 and len(trace) < 2:
            raise ValueError(
                f"negative trace {trace} has length < 2, violating the "
                f"single-final-inapplicable-action contract")


def train(dataset: Dataset, heads: int | None = None,
          cfg: TrainConfig = TrainConfig(),
          lcfg: LossConfig = LossConfig()) -> TrainResult:
    """Fit parameters to a labeled dataset by stochastic gradient descent.

    Parameters start uniform in [0, 1]; batches are drawn by reshuffling the
    dataset each epoch. With `cfg.patience` set, training stops once the
    binarized model has classified the whole training set correctly for that
    many consecutive evaluations. Fixed seeds give bit-identical runs.
    """
    _validate_dataset(dataset)
    if heads is None:
        heads = dataset.atom_count
    if heads is None or heads < 1:
        raise ValueError("number of heads must be a positive integer "
                         "(dataset carries no atom count)")
    n_actions = len(dataset.actions)
    rng = np.random.default_rng(cfg.seed)
    theta = rng.random((heads, n_actions, 3))
    state = OptState.initial(theta.shape)
    items = [(np.asarray(t, dtype=np.intp), label) for t, label in dataset.items]
    order = np.arange(len(items))

    history: list[tuple[int, float, float]] = []
    streak = 0
    step = 0
    done = False
    while not done:
        rng.shuffle(order)
        for start in range(0, len(order), cfg.batch_size):
            chunk = order[start:start + cfg.batch_size]
            loss = 0.0
            acc_grad = np.zeros_like(theta)
            for i in chunk:
                idx, label = items[i]
                l, g = _trace_loss_grad(theta, idx, label, lcfg)
                loss += l
                acc_grad += g
            loss /= len(chunk)
            acc_grad /= len(chunk)
            state, theta = radam_step(state, theta, acc_grad, cfg)
            step += 1
            if step % cfg.eval_every == 0 or step >= cfg.max_steps:
                acc = dataset_accuracy(binarize(theta), dataset)
                history.append((step, loss, acc))
                streak = streak + 1 if acc >= 1.0 else 0
                if cfg.patience is not None and streak >= cfg.patience:
                    done = True
            if step >= cfg.max_steps:
                done = True
            if done:
                break

    theta_bar = binarize(theta)
    final_acc = dataset_accuracy(theta_bar, dataset)
    extracted = extract_model(theta_bar, invented_atom_names(heads),
                              dataset.actions)
    return TrainResult(theta=theta, theta_bar=theta_bar, history=history,
                       train_accuracy=final_acc, domain=extracted,
                       steps_run=step)


@dataclass(frozen=True)
class EvalStats:
    """Per-prefix accuracy plus a confusion of final trace labels."""

    accuracy: float
    true_pos: int
    true_neg: int
    false_pos: int
    false_neg: int

    @property
    def total(self) -> int:
        return self.true_pos + self.true_neg + self.false_pos + self.false_neg


def evaluate(theta_bar: np.ndarray, dataset: Dataset, oracle: Domain) -> EvalStats:
    """Score a binary model against the oracle, prefix by prefix.

    A trace counts as correct only when the model's label agrees with the
    oracle's on every prefix; since per-position outputs depend only on the
    prefix before them, one pass plus a running OR covers all prefixes.
    """
    if not is_binary(theta_bar):
        raise ValueError("evaluate requires a binary parameter tensor")
    if theta_bar.shape[1] != oracle.n_actions:
        raise ValueError(f"parameter tensor covers {theta_bar.shape[1]} actions "
                         f"but the oracle domain has {oracle.n_actions}")
    hits = tp = tn = fp = fn = 0
    for trace, _ in dataset.items:
        model = boolean_forward(theta_bar, trace).flags
        truth = classify_trace(oracle, trace).flags
        model_first = model.index(1) if 1 in model else -1
        truth_first = truth.index(1) if 1 in truth else -1
        if model_first == truth_first:
            hits += 1
        model_label = 1 if model_first >= 0 else 0
        truth_label = 1 if truth_first >= 0 else 0
        if truth_label == 1:
            tp += model_label
            fn += 1 - model_label
        else:
            fp += model_label
            tn += 1 - model_label
    if not dataset.items:
        raise ValueError("dataset is empty")
    return EvalStats(accuracy=hits / len(dataset.items), true_pos=tp,
                     true_neg=tn, false_pos=fp, false_neg=fn)
