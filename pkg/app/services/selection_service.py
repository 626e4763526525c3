"""
Selection service - correlation matrix, average-linkage feature clustering,
cluster representatives and F-ranked top-k extraction
"""
import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from models.errors import InvalidParameterError, ShapeError, TooFewSamplesError, ZeroVarianceError
from models.selection import ClusterMap, CorrelationMatrix, SelectionResult
from services.stats_service import StatsService

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.3
DEFAULT_TOP_K = 30


class SelectionService:
    """Reduces a wide indicator matrix to a few decorrelated, target-relevant features"""

    @staticmethod
    def correlation_matrix(x: np.ndarray, names: Sequence[str]) -> CorrelationMatrix:
        x = np.asarray(x, dtype=float)
        names = tuple(names)
        if x.ndim != 2 or x.shape[1] != len(names):
            raise ShapeError(f"matrix of shape {x.shape} does not match {len(names)} names")
        if x.shape[0] < 2:
            raise TooFewSamplesError(x.shape[0], 2, "correlation_matrix")
        for j, name in enumerate(names):
            if np.ptp(x[:, j]) == 0.0:
                raise ZeroVarianceError(name)

        centered = x - x.mean(axis=0)
        unit = centered / np.sqrt(np.sum(centered * centered, axis=0))
        full = unit.T @ unit
        upper = np.triu(full, k=1)
        r = np.clip(upper + upper.T, -1.0, 1.0)
        np.fill_diagonal(r, 1.0)
        return CorrelationMatrix(names=names, r=r)

    @staticmethod
    def cluster_features(corr: CorrelationMatrix, threshold: float = DEFAULT_THRESHOLD) -> ClusterMap:
        """Average-linkage agglomeration on d = 1 - |r|.

        Merging continues while the closest pair of clusters is at most
        `threshold` apart. A cluster lives in the slot of its smallest member
        index, so the row-major argmin breaks ties by the smallest (i, j) pair.
        Without tied distances the partition equals scipy's
        hierarchy.fcluster(linkage(..., "average"), threshold, "distance");
        scipy leaves the order of tied merges unspecified.
        """
        if not 0.0 < threshold < 1.0:
            raise InvalidParameterError(f"threshold must lie in (0, 1), got {threshold}")
        m = corr.size
        dist = corr.distance()
        members: Dict[int, List[int]] = {i: [i] for i in range(m)}

        linkage = np.full((m, m), np.inf)
        iu = np.triu_indices(m, k=1)
        linkage[iu] = dist[iu]

        while len(members) > 1:
            flat = int(np.argmin(linkage))
            i, j = divmod(flat, m)
            if linkage[i, j] > threshold:
                break
            members[i] = sorted(members[i] + members.pop(j))
            linkage[j, :] = np.inf
            linkage[:, j] = np.inf
            for k, other in members.items():
                if k == i:
                    continue
                d = float(dist[np.ix_(members[i], other)].mean())
                linkage[min(i, k), max(i, k)] = d

        assignment = {}
        for cid, slot in enumerate(sorted(members)):
            for idx in members[slot]:
                assignment[corr.names[idx]] = cid
        ordered = {name: assignment[name] for name in corr.names}
        logger.info("[cluster_features] %d features -> %d clusters (threshold %.3g)",
                    m, len(members), threshold)
        return ClusterMap(assignment=ordered, threshold=threshold)

    @staticmethod
    def choose_representatives(clusters: ClusterMap, corr: CorrelationMatrix) -> ClusterMap:
        """Per cluster, the member with the highest mean |r| to its cluster mates"""
        if set(clusters.assignment) != set(corr.names):
            raise ShapeError("cluster map and correlation matrix cover different features")
        absr = np.abs(corr.r)
        reps = {}
        for cid in range(clusters.n_clusters):
            names = clusters.members(cid)
            if len(names) == 1:
                reps[cid] = names[0]
                continue
            idx = [corr.index(n) for n in names]
            scored = []
            for pos, name in enumerate(names):
                others = [idx[q] for q in range(len(idx)) if q != pos]
                scored.append((-float(absr[idx[pos], others].mean()), name))
            reps[cid] = min(scored)[1]
        return clusters.with_representatives(reps)

    @staticmethod
    def select_top_k(x: np.ndarray, y: np.ndarray, names: Sequence[str],
                     reps: Sequence[str], k: int = DEFAULT_TOP_K) -> SelectionResult:
        """Rank representatives by univariate F against y and keep the first k"""
        if k < 1:
            raise InvalidParameterError(f"k must be at least 1, got {k}")
        x = np.asarray(x, dtype=float)
        names = list(names)
        unknown = [r for r in reps if r not in names]
        if unknown:
            raise ShapeError(f"representatives not among matrix columns: {unknown}")

        scores = [StatsService.f_score(x[:, names.index(rep)], y, feature=rep) for rep in reps]
        scores.sort(key=lambda s: (-s.f_value, s.feature))
        ranked = tuple(s.with_rank(pos + 1) for pos, s in enumerate(scores))
        selected = tuple(s.feature for s in ranked[:min(k, len(ranked))])
        if len(selected) < k:
            logger.warning("[select_top_k] only %d representatives available for k=%d", len(selected), k)
        return SelectionResult(selected=selected, scores=ranked, k=k)

    @staticmethod
    def run_selection(x: np.ndarray, y: np.ndarray, names: Sequence[str],
                      threshold: float = DEFAULT_THRESHOLD, k: int = DEFAULT_TOP_K
                      ) -> Tuple[CorrelationMatrix, ClusterMap, SelectionResult]:
        """cluster -> representatives -> F-rank -> top-k"""
        corr = SelectionService.correlation_matrix(x, names)
        clusters = SelectionService.cluster_features(corr, threshold)
        clusters = SelectionService.choose_representatives(clusters, corr)
        result = SelectionService.select_top_k(x, y, names, clusters.representative_list(), k)
        return corr, clusters, result
