"""Paired (parameter, simulation) datasets, column scaling and seeding."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetError",
    "PairedDataset",
    "SeedSpec",
    "load_paired_dataset",
    "write_csv",
    "normalize_columns",
    "denormalize_point",
]


class DatasetError(ValueError):
    """Raised for malformed or inconsistent input data."""


def _ranges(values: np.ndarray) -> np.ndarray:
    return np.column_stack([values.min(axis=0), values.max(axis=0)])


@dataclass(frozen=True)
class PairedDataset:
    """``n`` parameter rows paired with ``n`` simulation rows and one observation.

    ``param_ranges`` and ``sim_ranges`` hold per-column ``(min, max)`` of the
    original (unscaled) data; the simulation ranges include the observation.
    They survive normalization so estimates can be mapped back.
    """

    params: np.ndarray
    sims: np.ndarray
    observation: np.ndarray
    param_ranges: np.ndarray = field(default=None)
    sim_ranges: np.ndarray = field(default=None)
    normalized: bool = False

    def __post_init__(self):
        params = np.atleast_2d(np.asarray(self.params, dtype=float))
        sims = np.asarray(self.sims, dtype=float)
        if sims.ndim == 1:
            sims = sims[:, None]
        obs = np.atleast_1d(np.asarray(self.observation, dtype=float)).ravel()
        if params.shape[0] != sims.shape[0]:
            raise DatasetError(
                f"row-count mismatch: {params.shape[0]} parameter rows vs "
                f"{sims.shape[0]} simulation rows"
            )
        if params.shape[0] < 1:
            raise DatasetError("dataset must contain at least one row")
        if obs.shape[0] != sims.shape[1]:
            raise DatasetError(
                f"observation has {obs.shape[0]} entries, expected {sims.shape[1]}"
            )
        for name, arr in (("params", params), ("sims", sims), ("observation", obs)):
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"non-finite values in {name}")
        for arr in (params, sims, obs):
            arr.setflags(write=False)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "sims", sims)
        object.__setattr__(self, "observation", obs)
        if self.param_ranges is None:
            object.__setattr__(self, "param_ranges", _ranges(params))
        if self.sim_ranges is None:
            object.__setattr__(self, "sim_ranges", _ranges(np.vstack([sims, obs])))

    @property
    def n(self) -> int:
        return self.params.shape[0]

    @property
    def d_q(self) -> int:
        return self.params.shape[1]

    @property
    def d_s(self) -> int:
        return self.sims.shape[1]


@dataclass(frozen=True)
class SeedSpec:
    """Master seed from which every randomized stage draws a named substream.

    A substream depends only on ``(master_seed, tag, index)``, so streams can
    be drawn in any order, on any worker, and always come out bit-identical.
    """

    master_seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @staticmethod
    def _tag_key(tag: str) -> int:
        return int.from_bytes(hashlib.sha256(tag.encode("utf-8")).digest()[:4], "little")

    def sequence(self, tag: str, index: int = 0) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=int(self.master_seed), spawn_key=(self._tag_key(tag), int(index))
        )

    def rng(self, tag: str, index: int = 0) -> np.random.Generator:
        return np.random.default_rng(self.sequence(tag, index))

    def child(self, tag: str, index: int = 0) -> "SeedSpec":
        """Derive an independent master seed, e.g. one per benchmark replicate."""
        state = self.sequence(tag, index).generate_state(2, dtype=np.uint32)
        return SeedSpec(int(state[0]) | (int(state[1]) << 32))


def _read_numeric_csv(path: Path) -> tuple[list[str], np.ndarray]:
    if not path.is_file():
        raise DatasetError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row required") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DatasetError(
                    f"{path}: line {lineno} has {len(row)} cells, header has {len(header)}"
                )
            values = []
            for col, cell in zip(header, row):
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise DatasetError(
                        f"{path}: non-numeric cell {cell.strip()!r} at line {lineno}, "
                        f"column {col!r}"
                    )
                values.append(v)
            rows.append(values)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return header, data


def load_paired_dataset(params_path, sims_path, obs_path) -> PairedDataset:
    """Read a (params, sims, observation) CSV triple.

    Each file needs a header row. Row ``i`` of the parameter file pairs with
    row ``i`` of the simulation file; the observation file holds one row.
    """
    _, params = _read_numeric_csv(Path(params_path))
    _, sims = _read_numeric_csv(Path(sims_path))
    _, obs = _read_numeric_csv(Path(obs_path))
    if params.shape[0] != sims.shape[0]:
        raise DatasetError(
            f"row-count mismatch: {params_path} has {params.shape[0]} rows, "
            f"{sims_path} has {sims.shape[0]}"
        )
    if obs.shape[0] != 1:
        raise DatasetError(f"{obs_path}: expected exactly one observation row, got {obs.shape[0]}")
    if obs.shape[1] != sims.shape[1]:
        raise DatasetError(
            f"{obs_path}: observation has {obs.shape[1]} columns, sims have {sims.shape[1]}"
        )
    return PairedDataset(params, sims, obs[0])


def write_csv(path, values, prefix: str) -> None:
    """Write a matrix with header ``{prefix}1..{prefix}d`` using round-trip float text."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"{prefix}{i + 1}" for i in range(values.shape[1])])
        for row in values:
            writer.writerow([repr(float(v)) for v in row])


def _scale(values: np.ndarray, ranges: np.ndarray) -> np.ndarray:
    lo, hi = ranges[:, 0], ranges[:, 1]
    span = hi - lo
    constant = span == 0
    out = (values - lo) / np.where(constant, 1.0, span)
    return np.where(constant, 0.5, out)


def normalize_columns(dataset: PairedDataset) -> PairedDataset:
    """Min-max scale every column to [0, 1]; constant columns become 0.5.

    The returned dataset keeps the original ranges so that
    :func:`denormalize_point` can invert the map.
    """
    if dataset.normalized:
        return dataset
    return replace(
        dataset,
        params=_scale(dataset.params, dataset.param_ranges),
        sims=_scale(dataset.sims, dataset.sim_ranges),
        observation=_scale(dataset.observation, dataset.sim_ranges),
        normalized=True,
    )


def denormalize_point(x, ranges) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    ranges = np.asarray(ranges, dtype=float)
    if x.shape[-1] != ranges.shape[0]:
        raise ValueError(f"point has length {x.shape[-1]}, ranges cover {ranges.shape[0]} columns")
    lo, hi = ranges[:, 0], ranges[:, 1]
    return np.where(hi == lo, lo, lo + x * (hi - lo))
