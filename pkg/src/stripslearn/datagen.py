"""Sampling and enumerating labeled action traces.

Positive traces are grown one action at a time by drawing uniformly from the
consistent extensions of the prefix; negative traces take a positive prefix
and append one uniformly chosen inconsistent action, so the single violation
always sits at the final position. Datasets mix the two classes at a fixed
ratio with lengths drawn uniformly up to a bound, optionally rejecting
duplicates.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core import Domain, Trace, WriterTable, classify_trace

# Consecutive duplicate draws tolerated before concluding the domain cannot
# supply enough unique traces.
REJECT_LIMIT = 5000


class SamplingError(RuntimeError):
    """Raised when a bounded-retry sampling loop exhausts its budget."""


@dataclass(frozen=True)
class DatasetConfig:
    """Dataset policy: size, class ratio, length bound, seed, uniqueness."""

    count: int
    max_len: int
    neg_fraction: float = 0.8
    seed: int = 0
    unique: bool = True

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not 0.0 <= self.neg_fraction <= 1.0:
            raise ValueError("neg_fraction must be in [0, 1]")
        if self.count > 0 and self.neg_fraction > 0 and self.max_len < 2:
            raise ValueError("max_len must be >= 2 when negatives are requested")
        if self.count > 0 and self.max_len < 1:
            raise ValueError("max_len must be >= 1")


@dataclass
class Dataset:
    """Labeled traces plus the naming context needed to interpret them."""

    domain_name: str
    actions: tuple[str, ...]
    items: list[tuple[Trace, int]]
    atom_count: int | None = None
    config: DatasetConfig | None = None

    def __len__(self) -> int:
        return len(self.items)

    @property
    def n_negative(self) -> int:
        return sum(label for _, label in self.items)

    @property
    def n_positive(self) -> int:
        return len(self.items) - self.n_negative


def _consistent_actions(d: Domain, writers: WriterTable) -> list[int]:
    return [m for m, a in enumerate(d.actions) if not writers.violates(a)]


def sample_positive(d: Domain, length: int, rng: np.random.Generator,
                    max_restarts: int = 100) -> Trace:
    """Draw a uniformly-extended consistent trace of exactly `length` actions."""
    if length < 1:
        raise ValueError("length must be >= 1")
    if d.n_actions == 0:
        raise SamplingError("domain has no actions")
    for _ in range(max_restarts):
        writers = WriterTable()
        out: list[int] = []
        for _ in range(length):
            cands = _consistent_actions(d, writers)
            if not cands:
                break
            m = cands[int(rng.integers(len(cands)))]
            out.append(m)
            writers.update(d.actions[m])
        if len(out) == length:
            return tuple(out)
    raise SamplingError(
        f"no positive trace of length {length} found after {max_restarts} restarts")


def sample_negative(d: Domain, length: int, rng: np.random.Generator,
                    max_retries: int = 100) -> Trace:
    """Draw a positive prefix plus one inconsistent final action."""
    if length < 2:
        raise ValueError("negative traces need length >= 2: the first action "
                         "can never violate a precondition")
    for _ in range(max_retries):
        prefix = sample_positive(d, length - 1, rng)
        writers = WriterTable()
        for m in prefix:
            writers.update(d.actions[m])
        bad = [m for m, a in enumerate(d.actions) if writers.violates(a)]
        if bad:
            return prefix + (bad[int(rng.integers(len(bad)))],)
    raise SamplingError(
        f"no inconsistent final action found for length {length} "
        f"after {max_retries} prefixes")


def build_dataset(d: Domain, cfg: DatasetConfig) -> Dataset:
    """Assemble a labeled dataset per the configured policy.

    ceil(count * neg_fraction) negatives, the rest positives; lengths uniform
    in [1, max_len] for positives and [2, max_len] for negatives. With
    uniqueness on, duplicate draws are rejected; too many consecutive
    rejections mean the domain cannot supply enough unique traces.
    """
    rng = np.random.default_rng(cfg.seed)
    n_neg = math.ceil(cfg.count * cfg.neg_fraction - 1e-9)
    n_pos = cfg.count - n_neg
    seen: set[Trace] = set()
    items: list[tuple[Trace, int]] = []

    def fill(target: int, label: int, low: int) -> None:
        rejects = 0
        produced = 0
        while produced < target:
            length = int(rng.integers(low, cfg.max_len + 1))
            try:
                if label == 0:
                    trace = sample_positive(d, length, rng)
                else:
                    trace = sample_negative(d, length, rng)
            except SamplingError:
                rejects += 1
                if rejects > REJECT_LIMIT:
                    raise
                continue
            if cfg.unique and trace in seen:
                rejects += 1
                if rejects > REJECT_LIMIT:
                    kind = "negative" if label else "positive"
                    raise SamplingError(
                        f"not enough unique {kind} traces: got {produced} of "
                        f"{target} (length <= {cfg.max_len}) before "
                        f"{REJECT_LIMIT} consecutive duplicates")
                continue
            rejects = 0
            seen.add(trace)
            items.append((trace, label))
            produced += 1

    fill(n_pos, 0, 1)
    fill(n_neg, 1, 2)
    return Dataset(domain_name=d.name, actions=tuple(a.name for a in d.actions),
                   items=items, atom_count=d.n_atoms, config=cfg)


def enumerate_traces(d: Domain, max_len: int) -> Iterator[tuple[Trace, int]]:
    """Yield every trace of length 1..max_len with its label, lexicographically."""
    if d.n_actions ** max_len > 10_000_000:
        raise ValueError(
            f"{d.n_actions}^{max_len} traces exceed the enumeration guard")
    for length in range(1, max_len + 1):
        for combo in itertools.product(range(d.n_actions), repeat=length):
            yield combo, classify_trace(d, combo).label


def traces_equivalent(d1: Domain, d2: Domain, *, samples: int = 300,
                      max_len: int = 50, seed: int = 0) -> bool:
    """Sampled check that two domains induce the same per-position verdicts.

    Compares flag vectors on uniform random traces and on positive traces of
    each domain (where any disagreement is a missed or spurious violation).
    A sampled check can only refute equivalence, never prove it.
    """
    if d1.n_actions != d2.n_actions:
        raise ValueError("domains with different action counts are not comparable")
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        length = int(rng.integers(1, max_len + 1))
        trace = tuple(int(x) for x in rng.integers(0, d1.n_actions, size=length))
        if classify_trace(d1, trace).flags != classify_trace(d2, trace).flags:
            return False
    for source, other in ((d1, d2), (d2, d1)):
        for _ in range(samples):
            length = int(rng.integers(1, max_len + 1))
            try:
                trace = sample_positive(source, length, rng)
            except SamplingError:
                continue
            if classify_trace(other, trace).flags != classify_trace(source, trace).flags:
                return False
    return True
