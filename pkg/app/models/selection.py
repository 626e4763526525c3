"""
Feature selection data models
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Tuple

import numpy as np

from models.stats import FeatureScore


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    """Symmetric Pearson correlation matrix over named features"""
    names: Tuple[str, ...]
    r: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        r = np.array(self.r, dtype=float, copy=True)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def value(self, a: str, b: str) -> float:
        return float(self.r[self.index(a), self.index(b)])

    def distance(self) -> np.ndarray:
        """Correlation distance 1 - |r|"""
        return 1.0 - np.abs(self.r)


@dataclass(frozen=True)
class ClusterMap:
    """Feature -> cluster assignment plus one representative per cluster"""
    assignment: Dict[str, int]
    threshold: float
    representatives: Dict[int, str] = field(default_factory=dict)

    @property
    def n_clusters(self) -> int:
        return len(set(self.assignment.values()))

    def members(self, cluster_id: int) -> List[str]:
        return [name for name, cid in self.assignment.items() if cid == cluster_id]

    def clusters(self) -> List[List[str]]:
        return [self.members(cid) for cid in range(self.n_clusters)]

    def ordered_names(self) -> List[str]:
        """Every feature, grouped by cluster id"""
        return [name for members in self.clusters() for name in members]

    def as_sets(self) -> set:
        return {frozenset(members) for members in self.clusters()}

    def with_representatives(self, representatives: Dict[int, str]) -> "ClusterMap":
        return replace(self, representatives=dict(representatives))

    def representative_list(self) -> List[str]:
        return [self.representatives[cid] for cid in sorted(self.representatives)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "threshold": self.threshold,
            "clusters": [
                {
                    "id": cid,
                    "members": self.members(cid),
                    "representative": self.representatives.get(cid),
                }
                for cid in range(self.n_clusters)
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClusterMap":
        assignment = {}
        representatives = {}
        for cluster in data["clusters"]:
            for name in cluster["members"]:
                assignment[name] = int(cluster["id"])
            if cluster.get("representative") is not None:
                representatives[int(cluster["id"])] = cluster["representative"]
        return cls(assignment=assignment, threshold=float(data["threshold"]),
                   representatives=representatives)


@dataclass(frozen=True)
class SelectionResult:
    """Top-k representatives ordered by descending F value"""
    selected: Tuple[str, ...]
    scores: Tuple[FeatureScore, ...]
    k: int

    @property
    def shortfall(self) -> int:
        return max(0, self.k - len(self.selected))

    def score_for(self, feature: str) -> FeatureScore:
        for s in self.scores:
            if s.feature == feature:
                return s
        raise KeyError(feature)
