"""Synthetic indicator panels.

The published panel is not bundled, so the pipeline and its tests run on
panels generated here: a yearly table with a "year" column, the FFPI target
and named indicator columns driven by a few shared latent factors. Everything
is drawn from the toolkit generator, so a (seed, shape) pair always yields the
same file.
"""
import os
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from storage import artifact_store
from utils.rng import DEFAULT_SEED, Xoshiro256

FIXTURE_START_YEAR = 2000
FIXTURE_ROWS = 23
FIXTURE_FEATURES = 104
MISSING_TOKEN = ".."
DICTIONARY_FILE = os.path.join(os.path.dirname(__file__), "data", "indicators.csv")


def feature_codes(n: int) -> List[str]:
    """Dictionary codes first, then SYN.IND.### for anything beyond them"""
    codes = pd.read_csv(DICTIONARY_FILE, dtype=str, keep_default_na=False)["code"].tolist()
    names = codes[:n]
    names += [f"SYN.IND.{k:03d}" for k in range(len(names), n)]
    return names


def _normals(rng: Xoshiro256, *shape: int) -> np.ndarray:
    return np.array(rng.normals(int(np.prod(shape)))).reshape(shape)


def _latent_factors(rng: Xoshiro256, n_rows: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n_rows)
    walk_a = np.cumsum(_normals(rng, n_rows)) / np.sqrt(n_rows)
    walk_b = np.cumsum(_normals(rng, n_rows)) / np.sqrt(n_rows)
    return np.column_stack([t, t * t, np.sin(3.0 * np.pi * t), np.cos(2.0 * np.pi * t), walk_a, walk_b])


def generate_panel(n_features: int = FIXTURE_FEATURES, n_rows: int = FIXTURE_ROWS, seed: int = DEFAULT_SEED,
                   start_year: int = FIXTURE_START_YEAR, missing_cells: int = 4) -> pd.DataFrame:
    """Panel of indicators loading on shared trend, cycle and random-walk factors.

    Every third indicator is exponentiated so the panel carries skewed,
    strictly positive columns. The target mixes a trend, a cycle and a
    random walk with a mild nonlinearity. `missing_cells` interior cells are
    blanked with the ".." token.
    """
    rng = Xoshiro256(seed)
    factors = _latent_factors(rng, n_rows)
    loadings = _normals(rng, factors.shape[1], n_features)
    noise = _normals(rng, n_rows, n_features)
    levels = np.array([10.0 ** (1 + (k % 4)) for k in range(n_features)])

    signal = factors @ loadings + 0.3 * noise
    values = np.empty_like(signal)
    for j in range(n_features):
        if j % 3 == 2:
            values[:, j] = levels[j] * np.exp(0.5 * signal[:, j])
        else:
            values[:, j] = levels[j] * (1.0 + 0.1 * signal[:, j])

    t, _, cycle, _, walk, _ = factors.T
    target = 100.0 + 25.0 * t + 12.0 * cycle + 10.0 * walk + 4.0 * np.tanh(3.0 * (t - 0.5)) \
        + 1.5 * _normals(rng, n_rows)

    frame = pd.DataFrame(values, columns=feature_codes(n_features)).astype(object)
    for _ in range(missing_cells):
        frame.iat[1 + rng.below(n_rows - 2), rng.below(n_features)] = MISSING_TOKEN
    frame.insert(0, "FFPI", target)
    frame.insert(0, "year", list(range(start_year, start_year + n_rows)))
    return frame


def generate_clustered_panel(n_clusters: int = 12, per_cluster: int = 3, n_rows: int = FIXTURE_ROWS,
                             seed: int = DEFAULT_SEED, start_year: int = FIXTURE_START_YEAR,
                             spread: float = 1e-3) -> pd.DataFrame:
    """Panel whose indicators form `n_clusters` planted groups.

    Group bases are orthonormal over all rows; members are a rescaled base
    plus noise of relative size `spread`, so within-group |r| is close to 1.
    The target weights the bases with strictly decreasing coefficients.
    """
    rng = Xoshiro256(seed)
    raw = _normals(rng, n_rows, n_clusters)
    raw -= raw.mean(axis=0)
    bases, _ = np.linalg.qr(raw)
    columns = {}
    names = feature_codes(n_clusters * per_cluster)
    for g in range(n_clusters):
        for m in range(per_cluster):
            scale = 1.0 + m
            noise = np.array(rng.normals(n_rows))
            columns[names[g * per_cluster + m]] = 50.0 + scale * 10.0 * (bases[:, g] + spread * noise)
    weights = np.linspace(1.0, 0.2, n_clusters)
    target = 100.0 + 40.0 * bases @ weights + 0.5 * np.array(rng.normals(n_rows))
    frame = pd.DataFrame(columns)
    frame.insert(0, "FFPI", target)
    frame.insert(0, "year", list(range(start_year, start_year + n_rows)))
    return frame


def write_panel(frame: pd.DataFrame, path: str) -> str:
    """Write a panel with shortest round-trip floats so equal seeds give equal files"""
    return artifact_store.write_csv(path, list(frame.columns), frame.itertuples(index=False, name=None))


def write_fixture(path: str, seed: int = DEFAULT_SEED, n_features: int = FIXTURE_FEATURES,
                  n_rows: int = FIXTURE_ROWS, clusters: Optional[int] = None,
                  per_cluster: int = 3) -> str:
    if clusters:
        frame = generate_clustered_panel(clusters, per_cluster, n_rows, seed)
    else:
        frame = generate_panel(n_features, n_rows, seed)
    return write_panel(frame, path)


def planted_groups(frame: pd.DataFrame, per_cluster: int) -> List[Sequence[str]]:
    """Feature groups of a clustered panel, in column order"""
    names = [c for c in frame.columns if c not in ("year", "FFPI")]
    return [names[i:i + per_cluster] for i in range(0, len(names), per_cluster)]
