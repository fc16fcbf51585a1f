"""Multiuser broadcast channel: per-user blocks and exclusion stacks."""

from __future__ import annotations

from dataclasses import dataclass
import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .numerics import sample_gaussian_matrix

__all__ = [
    "ScenarioDims",
    "ChannelSet",
    "generate_channel",
    "exclude_user",
    "dump_channel_csv",
    "load_channel_csv",
]


@dataclass(frozen=True)
class ScenarioDims:
    """Transmit antennas ``nb`` and the receive-antenna count of each user."""

    nb: int
    per_user: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "per_user", tuple(int(n) for n in self.per_user))
        if self.nb < 1:
            raise ConfigError(f"nb must be >= 1, got {self.nb}")
        if not self.per_user:
            raise ConfigError("at least one user is required")
        if min(self.per_user) < 1:
            raise ConfigError(f"every user needs >= 1 antenna, got {self.per_user}")
        if self.nu > self.nb:
            raise ConfigError(
                f"total receive antennas {self.nu} exceed transmit antennas {self.nb}"
            )

    @classmethod
    def uniform(cls, nb: int, users: int, per_user: int) -> "ScenarioDims":
        return cls(nb, (per_user,) * users)

    @property
    def users(self) -> int:
        return len(self.per_user)

    @property
    def nu(self) -> int:
        return sum(self.per_user)

    def user_rows(self, j: int) -> slice:
        """Rows of the combined channel that belong to user ``j`` (1-based)."""
        _check_user(j, self.users)
        start = sum(self.per_user[: j - 1])
        return slice(start, start + self.per_user[j - 1])


@dataclass(frozen=True)
class ChannelSet:
    per_user: tuple[np.ndarray, ...]
    combined: np.ndarray

    @classmethod
    def from_blocks(cls, blocks: Sequence[np.ndarray]) -> "ChannelSet":
        blocks = tuple(np.atleast_2d(np.asarray(b, dtype=np.complex128)) for b in blocks)
        if len({b.shape[1] for b in blocks}) != 1:
            raise ConfigError("all user channels need the same number of columns")
        return cls(blocks, np.vstack(blocks))

    @property
    def dims(self) -> ScenarioDims:
        return ScenarioDims(self.nb, tuple(b.shape[0] for b in self.per_user))

    @property
    def nb(self) -> int:
        return self.combined.shape[1]

    @property
    def nu(self) -> int:
        return self.combined.shape[0]

    @property
    def users(self) -> int:
        return len(self.per_user)


def _check_user(j: int, users: int) -> None:
    if not 1 <= j <= users:
        raise IndexError(f"user index {j} outside 1..{users}")


def generate_channel(dims: ScenarioDims, rng: np.random.Generator) -> ChannelSet:
    """Draw every user's channel with i.i.d. CN(0, 1) entries, users in order."""
    blocks = [sample_gaussian_matrix(n, dims.nb, 1.0, rng) for n in dims.per_user]
    return ChannelSet.from_blocks(blocks)


def exclude_user(ch: ChannelSet, j: int) -> np.ndarray:
    """Stack of all user channels except user ``j`` (1-based), order preserved.

    For a single-user scenario the result has zero rows.
    """
    _check_user(j, ch.users)
    rest = [b for i, b in enumerate(ch.per_user, start=1) if i != j]
    if not rest:
        return np.zeros((0, ch.nb), dtype=np.complex128)
    return np.vstack(rest)


_CHANNEL_HEADER = ["user", "row", "col", "re", "im"]


def dump_channel_csv(ch: ChannelSet, path) -> None:
    """Write every entry as ``user,row,col,re,im`` (1-based user, 0-based row/col).

    Values use ``repr`` so that loading reproduces the channel bit for bit.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_CHANNEL_HEADER)
        for j, block in enumerate(ch.per_user, start=1):
            for (r, c), v in np.ndenumerate(block):
                w.writerow([j, r, c, repr(float(v.real)), repr(float(v.imag))])


def load_channel_csv(path) -> ChannelSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != _CHANNEL_HEADER:
            raise ConfigError(f"{Path(path)}: not a channel dump (header {header})")
        entries = [(int(u), int(r), int(c), complex(float(re), float(im)))
                   for u, r, c, re, im in reader]
    if not entries:
        raise ConfigError(f"{Path(path)}: channel dump is empty")
    users = max(e[0] for e in entries)
    shapes = {}
    for u, r, c, _ in entries:
        nr, nc = shapes.get(u, (0, 0))
        shapes[u] = (max(nr, r + 1), max(nc, c + 1))
    blocks = [np.zeros(shapes[u], dtype=np.complex128) for u in range(1, users + 1)]
    for u, r, c, v in entries:
        blocks[u - 1][r, c] = v
    return ChannelSet.from_blocks(blocks)
