"""Pointwise residual reports with JSON and CSV serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Mapping

import numpy as np

__all__ = ["ResidualReport"]


@dataclass(frozen=True)
class ResidualReport:
    """Per-sample values of a named residual plus summary norms.

    ``values`` has shape ``(m,)`` for a scalar residual or ``(m, k)``
    for a vector-valued one.  ``excluded`` lists sample indices left out
    of the norms (windows around trajectory breakpoints).  ``extras``
    holds named scalar defects that are not tied to a mesh sample.
    """

    name: str
    times: np.ndarray
    values: np.ndarray
    excluded: tuple[int, ...] = ()
    max_abs: float = field(init=False, default=0.0)
    l2: float = field(init=False, default=0.0)
    extras: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape[0] != times.shape[0]:
            raise ValueError("times and values must have the same sample count")
        if any(i < 0 or i >= times.shape[0] for i in self.excluded):
            raise ValueError("excluded index out of range")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        mask = np.ones(times.shape[0], dtype=bool)
        mask[list(self.excluded)] = False
        kept = np.abs(values[mask])
        if kept.size:
            object.__setattr__(self, "max_abs", float(kept.max()))
            object.__setattr__(self, "l2", float(math.sqrt(np.mean(np.square(kept)))))

    @property
    def components(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[1]

    def to_json_dict(self) -> dict:
        rows = self.values.reshape(self.times.shape[0], -1)
        return {
            "name": self.name,
            "max_abs": self.max_abs,
            "l2": self.l2,
            "excluded": list(self.excluded),
            "extras": dict(self.extras),
            "samples": [[float(t)] + [float(v) for v in row] for t, row in zip(self.times, rows)],
        }

    def write_csv(self, stream: IO[str]) -> None:
        rows = self.values.reshape(self.times.shape[0], -1)
        k = rows.shape[1]
        header = ["t"] + (["residual"] if k == 1 else [f"r{i + 1}" for i in range(k)])
        stream.write(",".join(header) + "\n")
        for t, row in zip(self.times, rows):
            stream.write(",".join(repr(float(v)) for v in (t, *row)) + "\n")
