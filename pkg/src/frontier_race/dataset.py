"""OR-Library dataset parsing: asset files (`port` format) and frontier files (`portef` format)."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

CORRELATION_TOL = 1e-9
DIAGONAL_REL_TOL = 1e-12
FRONTIER_SLACK = 1e-15


class DatasetFormatError(ValueError):
    """Raised when an input file does not follow the expected format."""


@dataclass(frozen=True)
class AssetUniverse:
    """Per-asset return statistics plus the covariance matrix built from correlations."""

    n: int
    mean_returns: np.ndarray
    std_devs: np.ndarray
    covariance: np.ndarray
    # Correlations as read from the file, kept so serialization round-trips bit-for-bit.
    correlations: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.n < 1:
            raise DatasetFormatError(f"asset count must be >= 1, got {self.n}")
        if len(self.mean_returns) != self.n or len(self.std_devs) != self.n:
            raise DatasetFormatError("mean_returns/std_devs length does not match n")
        if self.covariance.shape != (self.n, self.n):
            raise DatasetFormatError("covariance shape does not match n")
        if np.any(self.std_devs < 0):
            raise DatasetFormatError("negative standard deviation")
        if not np.array_equal(self.covariance, self.covariance.T):
            raise DatasetFormatError("covariance is not symmetric")
        diag = np.diag(self.covariance)
        expected = self.std_devs**2
        scale = np.maximum(expected, 1e-300)
        if np.any(np.abs(diag - expected) > DIAGONAL_REL_TOL * scale):
            raise DatasetFormatError("covariance diagonal does not equal squared std devs")


@dataclass(frozen=True)
class Uef:
    """Unconstrained efficient frontier as (mean return, variance) points sorted by return."""

    returns: np.ndarray
    variances: np.ndarray
    std_devs: np.ndarray

    def __post_init__(self):
        if len(self.returns) == 0:
            raise DatasetFormatError("frontier is empty")
        if np.any(np.diff(self.returns) < 0):
            raise DatasetFormatError("frontier points not sorted by mean return")
        if np.any(self.variances < 0):
            raise DatasetFormatError("negative frontier variance")
        if np.any(np.diff(self.variances) < -FRONTIER_SLACK):
            raise DatasetFormatError("frontier variance decreases as return increases")

    def __len__(self):
        return len(self.returns)

    @property
    def points(self):
        return list(zip(self.returns.tolist(), self.variances.tolist()))


def build_covariance(std_devs: np.ndarray, correlations: np.ndarray) -> np.ndarray:
    """Turn a correlation matrix into a covariance matrix: sigma_ij = rho_ij * s_i * s_j."""
    std_devs = np.asarray(std_devs, dtype=float)
    correlations = np.asarray(correlations, dtype=float)
    n = len(std_devs)
    if correlations.shape != (n, n):
        raise DatasetFormatError("correlation matrix shape does not match std devs")
    if np.any(np.abs(correlations) > 1.0 + CORRELATION_TOL):
        raise DatasetFormatError("correlation magnitude above 1")
    if np.any(np.abs(np.diag(correlations) - 1.0) > CORRELATION_TOL):
        raise DatasetFormatError("self-correlation differs from 1")
    return correlations * np.outer(std_devs, std_devs)


def _tokens(source) -> list[str]:
    if isinstance(source, str):
        return source.split()
    return source.read().split()


def _to_float(tok: str, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise DatasetFormatError(f"malformed {what}: {tok!r}") from None


def _to_int(tok: str, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise DatasetFormatError(f"malformed {what}: {tok!r}") from None


def parse_universe(source) -> AssetUniverse:
    """Parse an OR-Library `port` file (string or text stream) into an AssetUniverse.

    Format: N; then N lines of (mean return, std dev); then (i, j, correlation)
    for all asset pairs, 1-based. Self-pairs (i == i) are optional but must be 1.
    """
    toks = _tokens(source)
    if not toks:
        raise DatasetFormatError("empty input")
    n = _to_int(toks[0], "asset count")
    if n <= 0:
        raise DatasetFormatError(f"asset count must be positive, got {n}")
    need = 1 + 2 * n
    if len(toks) < need:
        raise DatasetFormatError("truncated asset statistics section")
    stats = [_to_float(t, "asset statistic") for t in toks[1:need]]
    mean_returns = np.array(stats[0::2])
    std_devs = np.array(stats[1::2])
    if np.any(std_devs < 0):
        raise DatasetFormatError("negative standard deviation")

    rest = toks[need:]
    if len(rest) % 3 != 0:
        raise DatasetFormatError("correlation section is not a sequence of (i, j, value) triples")
    corr = np.full((n, n), np.nan)
    np.fill_diagonal(corr, 1.0)
    for k in range(0, len(rest), 3):
        i = _to_int(rest[k], "asset index")
        j = _to_int(rest[k + 1], "asset index")
        rho = _to_float(rest[k + 2], "correlation")
        if not (1 <= i <= n and 1 <= j <= n):
            raise DatasetFormatError(f"asset index out of range [1, {n}]: ({i}, {j})")
        if abs(rho) > 1.0 + CORRELATION_TOL:
            raise DatasetFormatError(f"correlation magnitude above 1: {rho}")
        if i == j:
            if abs(rho - 1.0) > CORRELATION_TOL:
                raise DatasetFormatError(f"self-correlation of asset {i} is {rho}, expected 1")
            corr[i - 1, i - 1] = rho
            continue
        a, b = i - 1, j - 1
        if not np.isnan(corr[a, b]) and corr[a, b] != rho:
            raise DatasetFormatError(f"conflicting correlation entries for pair ({i}, {j})")
        corr[a, b] = rho
        corr[b, a] = rho
    if np.isnan(corr).any():
        raise DatasetFormatError("incomplete pair coverage in correlation section")

    return AssetUniverse(
        n=n,
        mean_returns=mean_returns,
        std_devs=std_devs,
        covariance=build_covariance(std_devs, corr),
        correlations=corr,
    )


def serialize_universe(universe: AssetUniverse) -> str:
    """Write an AssetUniverse back to `port` format with round-trippable precision."""
    if universe.correlations is not None:
        corr = universe.correlations
    else:
        corr = universe.covariance / np.outer(universe.std_devs, universe.std_devs)
    out = io.StringIO()
    out.write(f"{universe.n}\n")
    for mu, s in zip(universe.mean_returns, universe.std_devs):
        out.write(f"{mu:.17g} {s:.17g}\n")
    for i in range(universe.n):
        for j in range(i, universe.n):
            out.write(f"{i + 1} {j + 1} {corr[i, j]:.17g}\n")
    return out.getvalue()


def load_uef(source) -> Uef:
    """Parse an OR-Library `portef` file: one (mean return, variance) pair per line."""
    toks = _tokens(source)
    if not toks:
        raise DatasetFormatError("empty frontier file")
    if len(toks) % 2 != 0:
        raise DatasetFormatError("frontier file is not a sequence of (return, variance) pairs")
    vals = [_to_float(t, "frontier value") for t in toks]
    returns = np.array(vals[0::2])
    variances = np.array(vals[1::2])
    if np.any(variances < 0):
        raise DatasetFormatError("negative frontier variance")
    order = np.argsort(returns, kind="stable")
    returns = returns[order]
    variances = variances[order]
    return Uef(returns=returns, variances=variances, std_devs=np.sqrt(variances))


def load_universe_file(path) -> AssetUniverse:
    with open(path, "r") as fh:
        return parse_universe(fh)


def load_uef_file(path) -> Uef:
    with open(path, "r") as fh:
        return load_uef(fh)
