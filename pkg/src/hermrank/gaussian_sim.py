"""Exact simulation of fractional Gaussian noise by circulant embedding.

The autocovariance ``gamma(0..N-1)`` is embedded in a circulant whose size is
the next power of two at or above ``2(N - 1)``; its FFT gives the eigenvalues,
and a single complex FFT of scaled Gaussian noise yields a path whose real part
has exactly the fGn covariance. For ``1/2 < H < 1`` the embedding is
nonnegative definite, so only rounding-level negative eigenvalues occur.
"""
from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .config import DEFAULTS
from .errors import DomainError, EmbeddingError
from .hermite_core import factorials


def _check_hurst(H: float) -> float:
    H = float(H)
    if not 0.5 < H < 1.0:
        raise DomainError(f"Hurst index must lie in (1/2, 1), got {H}")
    return H


def fgn_covariance(H: float, n):
    """Autocovariance of unit-variance fGn at lag ``n``.

    ``H = 1/2`` is accepted as the white-noise test point.
    """
    if not 0.5 <= H < 1.0:
        raise DomainError(f"Hurst index must lie in [1/2, 1), got {H}")
    n = np.abs(np.asarray(n, dtype=float))
    a = 2.0 * H
    g = np.ones_like(n)
    g[n == 1] = np.expm1((a - 1.0) * np.log(2.0))
    far = n >= 2
    if np.any(far):
        # n**a * sum_j binom(a, 2j) n**-2j: every term carries a(a-1) and has
        # the same sign, so nothing cancels near H = 1/2 or at long lags
        inv2 = 1.0 / n[far] ** 2
        term = np.full_like(inv2, a * (a - 1.0) / 2.0) * inv2
        total = term.copy()
        for j in range(2, 60):
            term = term * (a - 2 * j + 2) * (a - 2 * j + 1) / ((2 * j - 1) * (2 * j)) * inv2
            total += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
                break
        g[far] = n[far] ** a * total
    return g if g.ndim else float(g)


@dataclass(frozen=True)
class FgnModel:
    hurst: float
    length: int

    def __post_init__(self):
        object.__setattr__(self, "hurst", _check_hurst(self.hurst))
        if int(self.length) != self.length or self.length < 2:
            raise DomainError(f"path length must be an integer >= 2, got {self.length}")
        object.__setattr__(self, "length", int(self.length))

    def to_dict(self) -> dict:
        return {"hurst": self.hurst, "length": self.length}


@dataclass(frozen=True)
class FgnPath:
    values: np.ndarray
    model: FgnModel
    seed: int
    #: eigenvalues clamped to zero while embedding (rounding-level negatives)
    clamped: int = 0

    def header(self) -> str:
        return f"# version={__version__} H={self.model.hurst!r} N={self.model.length} seed={self.seed}"

    def write_csv(self, path) -> None:
        path = Path(path)
        with path.open("w") as fh:
            fh.write(self.header() + "\n")
            for v in self.values.tolist():
                fh.write(f"{v!r}\n")

    def write_binary(self, path) -> Path:
        """Raw little-endian float64 values plus a ``.json`` sidecar; returns the sidecar path."""
        path = Path(path)
        self.values.astype("<f8").tofile(path)
        sidecar = path.with_name(path.name + ".json")
        meta = {"version": __version__, "model": self.model.to_dict(), "seed": self.seed, "dtype": "<f8", "count": len(self.values)}
        sidecar.write_text(json.dumps(meta, indent=2) + "\n")
        return sidecar


def read_csv(path) -> FgnPath:
    lines = Path(path).read_text().splitlines()
    fields = dict(tok.split("=", 1) for tok in lines[0].lstrip("# ").split())
    values = np.array([float(s) for s in lines[1:] if s.strip()])
    model = FgnModel(float(fields["H"]), int(fields["N"]))
    if len(values) != model.length:
        raise ValueError(f"{path}: header says N={model.length} but found {len(values)} values")
    return FgnPath(values, model, int(fields["seed"]))


def read_binary(path) -> FgnPath:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    values = np.fromfile(path, dtype=meta.get("dtype", "<f8")).astype(float)
    return FgnPath(values, FgnModel(**meta["model"]), int(meta["seed"]))


def embedding_size(length: int) -> int:
    return 1 << max(1, (2 * (length - 1) - 1).bit_length())


@lru_cache(maxsize=64)
def _embedding(H: float, length: int, clamp_rel: float):
    m = embedding_size(length)
    j = np.arange(m)
    row = fgn_covariance(H, np.minimum(j, m - j))
    lam = np.fft.fft(row).real
    floor = -clamp_rel * lam.max()
    if lam.min() < floor:
        raise EmbeddingError(f"circulant embedding for H={H}, N={length} has eigenvalue {lam.min():.3g}")
    negative = int(np.sum(lam < 0))
    if negative:
        warnings.warn(f"clamped {negative} slightly negative embedding eigenvalue(s) to zero", RuntimeWarning)
    scale = np.sqrt(np.clip(lam, 0.0, None) / m)
    scale.setflags(write=False)
    return scale, negative


def _rng(seed: int, length: int) -> np.random.Generator:
    # the path length is mixed in so paths of different sizes share no draws
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(length,)))


def sample_fgn(model: FgnModel, seed: int, clamp_rel: float = DEFAULTS.clamp_rel) -> FgnPath:
    """One exact fGn path; a pure function of ``(model, seed)``."""
    if seed < 0:
        raise DomainError("seed must be non-negative")
    scale, negative = _embedding(model.hurst, model.length, clamp_rel)
    rng = _rng(seed, model.length)
    m = len(scale)
    noise = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    values = np.fft.fft(scale * noise)[: model.length].real
    values.setflags(write=False)
    return FgnPath(values, model, int(seed), negative)


def sample_fgn_batch(model: FgnModel, seeds, threads: int = 1) -> np.ndarray:
    """Stack of paths, row ``i`` identical to ``sample_fgn(model, seeds[i]).values``."""
    seeds = [int(s) for s in seeds]
    if threads <= 1:
        rows = [sample_fgn(model, s).values for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda s: sample_fgn(model, s).values, seeds))
    return np.vstack(rows) if rows else np.empty((0, model.length))


def variance_of_hermite_sums(H: float, m: int, N: int) -> float:
    """Exact ``Var sum_{n=1..N} He_m(Y(n))`` for unit-variance fGn ``Y``."""
    if m < 1:
        raise DomainError("Hermite order must be at least 1")
    if N < 1:
        raise DomainError("N must be at least 1")
    lags = np.arange(1, N)
    total = N + 2.0 * np.sum((N - lags) * fgn_covariance(H, lags) ** m)
    return float(factorials(m)[m] * total)


def sample_autocovariance(paths: np.ndarray, max_lag: int):
    """Mean-zero lag products averaged over time, per path; shape ``(R, max_lag + 1)``.

    The known zero mean is used, so each entry is an unbiased estimate.
    """
    paths = np.atleast_2d(paths)
    N = paths.shape[1]
    out = np.empty((paths.shape[0], max_lag + 1))
    for lag in range(max_lag + 1):
        out[:, lag] = np.einsum("ij,ij->i", paths[:, : N - lag], paths[:, lag:]) / (N - lag)
    return out

