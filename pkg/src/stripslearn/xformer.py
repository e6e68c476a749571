"""Differentiable trace classifier with one attention head per atom.

Parameters live in a dense tensor theta of shape (n_atoms, n_actions, 3)
with entries in [0, 1]. Slot 0 holds the query (atom is a precondition),
slot 1 the key (atom is affected) and slot 2 the value (the effect deletes
the atom). The forward pass projects a trace to per-head scalar Q/K/V
sequences, forms score matrices Q K^T under strict future masking,
normalizes them with a stick-breaking product that concentrates mass on the
rightmost high-scoring earlier position, aggregates values, and combines
heads and positions with product-form ORs. With binary parameters every
operation collapses to Boolean logic, and the tensor can be read back as a
STRIPS domain.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Action, Domain, TraceVerdict, validate_domain

QUERY, KEY, VALUE = 0, 1, 2


def theta_star(d: Domain) -> np.ndarray:
    """The exact parameter tensor of a known domain.

    theta[l, m] is (1 if atom l is a precondition of action m, 1 if action m
    affects atom l, 1 if it deletes atom l). An atom in both add and delete
    lists counts as deleted, matching progression.
    """
    validate_domain(d)
    th = np.zeros((d.n_atoms, d.n_actions, 3))
    for l, p in enumerate(d.atoms):
        for m, a in enumerate(d.actions):
            if p in a.pre:
                th[l, m, QUERY] = 1.0
            if p in a.add or p in a.delete:
                th[l, m, KEY] = 1.0
            if p in a.delete:
                th[l, m, VALUE] = 1.0
    return th


@dataclass(frozen=True)
class ForwardRecord:
    """Every intermediate of one forward evaluation.

    q, k, v: (heads, n) per-position projections; scores: (heads, n, n)
    masked score matrices; attn: (heads, n, n) stick-breaking weights;
    head_out: (heads, n) per-head violation degrees; y: (n,) combined
    per-position violation degrees; f: scalar trace-level output.
    """

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    scores: np.ndarray
    attn: np.ndarray
    head_out: np.ndarray
    y: np.ndarray
    f: float


def _check_trace(theta: np.ndarray, trace: Sequence[int]) -> np.ndarray:
    if theta.ndim != 3 or theta.shape[2] != 3:
        raise ValueError(f"theta must have shape (atoms, actions, 3), got {theta.shape}")
    idx = np.asarray(trace, dtype=np.intp)
    if idx.size < 1:
        raise ValueError("trace must contain at least one action")
    if idx.min() < 0 or idx.max() >= theta.shape[1]:
        raise ValueError(f"action index out of range [0, {theta.shape[1]})")
    return idx


def stick_breaking(scores: np.ndarray) -> np.ndarray:
    """Normalize score rows so weight concentrates on the rightmost score.

    attn[..., i, j] = scores[..., i, j] * prod_{k > j} (1 - scores[..., i, k]).
    Rows of binary scores become one-hot at their rightmost 1 (or all zero).
    """
    one_minus = 1.0 - scores
    suffix = np.ones_like(scores)
    if scores.shape[-1] > 1:
        rev = np.cumprod(one_minus[..., ::-1], axis=-1)[..., ::-1]
        suffix[..., :-1] = rev[..., 1:]
    return scores * suffix


def forward(theta: np.ndarray, trace: Sequence[int]) -> ForwardRecord:
    """Evaluate the classifier on a trace, keeping all intermediates."""
    idx = _check_trace(theta, trace)
    n = idx.size
    q = theta[:, idx, QUERY]
    k = theta[:, idx, KEY]
    v = theta[:, idx, VALUE]
    scores = q[:, :, None] * k[:, None, :]
    scores *= np.tri(n, k=-1)
    attn = stick_breaking(scores)
    head_out = np.einsum("hij,hj->hi", attn, v)
    y = 1.0 - np.prod(1.0 - head_out, axis=0)
    f = 1.0 - np.prod(1.0 - y)
    return ForwardRecord(q=q, k=k, v=v, scores=scores, attn=attn,
                         head_out=head_out, y=y, f=float(f))


def binarize(theta: np.ndarray) -> np.ndarray:
    """Threshold every entry at 0.5."""
    return (np.asarray(theta) >= 0.5).astype(float)


def is_binary(theta: np.ndarray) -> bool:
    return bool(np.all((theta == 0.0) | (theta == 1.0)))


def boolean_forward(theta_bar: np.ndarray, trace: Sequence[int]) -> TraceVerdict:
    """Exact Boolean evaluation of a binary parameter tensor on a trace.

    Equivalent to thresholding nothing: with entries in {0, 1} the forward
    pass computes, per head, whether the most recent key position before i
    carries value 1, so a last-writer scan reproduces y and f exactly.
    """
    idx = _check_trace(theta_bar, trace)
    if not is_binary(theta_bar):
        raise ValueError("boolean_forward requires a binary parameter tensor")
    q = theta_bar[:, :, QUERY] != 0.0
    k = theta_bar[:, :, KEY] != 0.0
    v = theta_bar[:, :, VALUE] != 0.0
    heads = theta_bar.shape[0]
    last_deleted = np.zeros(heads, dtype=bool)
    flags = []
    for m in idx:
        flags.append(1 if bool(np.any(q[:, m] & last_deleted)) else 0)
        affected = k[:, m]
        last_deleted = np.where(affected, v[:, m], last_deleted)
    return TraceVerdict(label=max(flags, default=0), flags=tuple(flags))


def extract_model(theta_bar: np.ndarray, atom_names: Sequence[str],
                  action_names: Sequence[str]) -> Domain:
    """Read a STRIPS domain off binary parameters.

    Query bit -> precondition; key bit with value 0 -> add effect; key bit
    with value 1 -> delete effect. The value bit is ignored where the key
    bit is 0.
    """
    if not is_binary(theta_bar):
        raise ValueError("extract_model requires a binary parameter tensor")
    heads, n_actions, _ = theta_bar.shape
    if len(atom_names) != heads or len(action_names) != n_actions:
        raise ValueError(
            f"name lists ({len(atom_names)} atoms, {len(action_names)} actions) "
            f"do not match tensor shape {theta_bar.shape}")
    actions = []
    for m, name in enumerate(action_names):
        pre = [atom_names[l] for l in range(heads) if theta_bar[l, m, QUERY]]
        add = [atom_names[l] for l in range(heads)
               if theta_bar[l, m, KEY] and not theta_bar[l, m, VALUE]]
        delete = [atom_names[l] for l in range(heads)
                  if theta_bar[l, m, KEY] and theta_bar[l, m, VALUE]]
        actions.append(Action.make(name, pre=pre, add=add, delete=delete))
    d = Domain(name="extracted", atoms=tuple(atom_names), actions=tuple(actions))
    validate_domain(d)
    return d


def invented_atom_names(heads: int) -> list[str]:
    """Neutral atom names for models extracted from learned parameters."""
    return [f"x{l + 1}" for l in range(heads)]
