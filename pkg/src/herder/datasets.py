"""Reading, writing and generating DMKP benchmark files.

File layout (UTF-8, whitespace separated)::

    DMKP 1
    name <identifier>
    delta <decimal>
    states <count>
    items <n>
    knapsacks <m>
    state 0
    <n profits>
    <m lines of n weights>
    <m capacities>
    state 1
    ...

Every state is written out in full, so files are self-contained and the
writer output is the canonical form accepted byte-for-byte by the parser.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import Iterable, Iterator, Mapping, TextIO

import numpy as np

from .problem import DmkpInstance, MkpState

FORMAT_TAG = "DMKP"
FORMAT_VERSION = 1


class DatasetError(ValueError):
    """Malformed dataset or best-known file."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno is not None else message)


class _Lines:
    def __init__(self, lines: Iterable[str]):
        self._it: Iterator[tuple[int, str]] = enumerate(lines, start=1)
        self.lineno = 0

    def next(self, what: str) -> list[str]:
        for lineno, raw in self._it:
            self.lineno = lineno
            tokens = raw.split()
            if tokens:
                return tokens
        raise DatasetError(f"unexpected end of file while reading {what}", self.lineno + 1)

    def keyword(self, key: str) -> str:
        tokens = self.next(key)
        if len(tokens) != 2 or tokens[0] != key:
            raise DatasetError(f"expected '{key} <value>', got {' '.join(tokens)!r}", self.lineno)
        return tokens[1]

    def ints(self, count: int, what: str) -> list[int]:
        tokens = self.next(what)
        if len(tokens) != count:
            raise DatasetError(f"{what}: expected {count} values, got {len(tokens)}", self.lineno)
        try:
            values = [int(t) for t in tokens]
        except ValueError:
            raise DatasetError(f"{what}: non-integer value", self.lineno) from None
        if any(v < 0 for v in values):
            raise DatasetError(f"{what}: negative value", self.lineno)
        return values

    def rest(self) -> list[str] | None:
        for lineno, raw in self._it:
            self.lineno = lineno
            tokens = raw.split()
            if tokens:
                return tokens
        return None


def _int_field(lines: _Lines, key: str, minimum: int) -> int:
    raw = lines.keyword(key)
    try:
        value = int(raw)
    except ValueError:
        raise DatasetError(f"{key}: not an integer: {raw!r}", lines.lineno) from None
    if value < minimum:
        raise DatasetError(f"{key}: must be >= {minimum}", lines.lineno)
    return value


def parse_dmkp(stream: TextIO | str) -> DmkpInstance:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    lines = _Lines(stream)
    header = lines.next("header")
    if header != [FORMAT_TAG, str(FORMAT_VERSION)]:
        raise DatasetError(f"bad header {' '.join(header)!r}", lines.lineno)
    name = lines.keyword("name")
    raw_delta = lines.keyword("delta")
    try:
        delta = float(raw_delta)
    except ValueError:
        raise DatasetError(f"delta: not a number: {raw_delta!r}", lines.lineno) from None
    if not 0.0 <= delta <= 1.0:
        raise DatasetError("delta must lie in [0, 1]", lines.lineno)
    count = _int_field(lines, "states", 1)
    n = _int_field(lines, "items", 1)
    m = _int_field(lines, "knapsacks", 1)

    states = []
    for expected in range(count):
        raw_idx = lines.keyword("state")
        if raw_idx != str(expected):
            raise DatasetError(f"expected state {expected}, got {raw_idx}", lines.lineno)
        profits = lines.ints(n, "profits")
        weights = [lines.ints(n, f"weights row {k}") for k in range(m)]
        capacities = lines.ints(m, "capacities")
        states.append(MkpState(expected, profits, weights, capacities))
    trailing = lines.rest()
    if trailing is not None:
        raise DatasetError(f"trailing data after {count} states", lines.lineno)
    return DmkpInstance(name, delta, tuple(states))


def write_dmkp(instance: DmkpInstance, stream: TextIO | None = None) -> str:
    """Serialise ``instance`` in canonical form; also written to ``stream`` if given."""
    out: list[str] = [
        f"{FORMAT_TAG} {FORMAT_VERSION}",
        f"name {instance.name}",
        f"delta {instance.delta!r}",
        f"states {len(instance.states)}",
        f"items {instance.n}",
        f"knapsacks {instance.m}",
    ]
    for st in instance.states:
        out.append(f"state {st.state_index}")
        out.append(" ".join(map(str, st.profits.tolist())))
        out.extend(" ".join(map(str, row)) for row in st.weights.tolist())
        out.append(" ".join(map(str, st.capacities.tolist())))
    text = "\n".join(out) + "\n"
    if stream is not None:
        stream.write(text)
    return text


def read_dmkp(path: str | Path) -> DmkpInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_dmkp(fh)


def save_dmkp(instance: DmkpInstance, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_dmkp(instance, fh)


def _perturb(values: np.ndarray, lo: np.ndarray, floor: int) -> np.ndarray:
    return np.maximum(floor, np.rint(values * lo)).astype(np.int64)


def generate_dmkp(
    base: MkpState,
    delta: float,
    num_changes: int,
    seed: int,
    name: str | None = None,
) -> DmkpInstance:
    """Build a dynamic instance by repeated multiplicative perturbation.

    State ``s + 1`` multiplies every profit, weight and capacity of state ``s``
    by an independent factor drawn uniformly from ``[1 - delta, 1 + delta]``,
    rounds to the nearest integer and floors profits and capacities at 1 and
    weights at 0. All three value groups are perturbed on every change.
    """
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if num_changes < 0:
        raise ValueError("num_changes must be >= 0")
    rng = np.random.default_rng(seed)
    n, m = base.n, base.m
    states = [MkpState(0, base.profits, base.weights, base.capacities)]
    for s in range(1, num_changes + 1):
        prev = states[-1]
        fp = rng.uniform(1.0 - delta, 1.0 + delta, size=n)
        fw = rng.uniform(1.0 - delta, 1.0 + delta, size=(m, n))
        fc = rng.uniform(1.0 - delta, 1.0 + delta, size=m)
        states.append(
            MkpState(
                s,
                _perturb(prev.profits, fp, 1),
                _perturb(prev.weights, fw, 0),
                _perturb(prev.capacities, fc, 1),
            )
        )
    if name is None:
        name = f"gen-n{n}-m{m}-s{num_changes}-d{delta:g}-seed{seed}"
    return DmkpInstance(name, float(delta), tuple(states))


def load_best_known(stream: TextIO | str) -> dict[int, int]:
    """Parse ``<state_index> <profit>`` lines; ``#`` starts a comment line."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    best: dict[int, int] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise DatasetError("expected '<state_index> <profit>'", lineno)
        try:
            idx, profit = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise DatasetError("non-numeric best-known entry", lineno) from None
        if idx < 0:
            raise DatasetError("negative state index", lineno)
        if idx in best:
            raise DatasetError(f"duplicate state index {idx}", lineno)
        best[idx] = profit
    return best


def read_best_known(path: str | Path) -> dict[int, int]:
    with open(path, encoding="utf-8") as fh:
        return load_best_known(fh)


def write_best_known(best: Mapping[int, int], stream: TextIO | None = None, header: str = "") -> str:
    out = [f"# {line}" if line else "#" for line in header.splitlines()]
    out.extend(f"{idx} {best[idx]}" for idx in sorted(best))
    text = "\n".join(out) + "\n"
    if stream is not None:
        stream.write(text)
    return text
