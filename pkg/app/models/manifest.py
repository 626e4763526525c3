"""
Run manifest - the reproducibility record written next to every artifact set
"""
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional

STATUS_OK = "ok"
STATUS_FAILED = "FAILED"
STAGE_ORDER = ("eda", "select", "train", "evaluate", "report")


@dataclass
class StageRecord:
    name: str
    millis: float
    status: str = STATUS_OK
    error: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StageRecord":
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass
class OutputRecord:
    path: str
    sha256: str

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunManifest:
    config: Dict[str, Any]
    version: str
    stages: List[StageRecord] = field(default_factory=list)
    outputs: List[OutputRecord] = field(default_factory=list)
    shortfall: int = 0
    failed_models: Dict[str, str] = field(default_factory=dict)

    @property
    def status(self) -> str:
        return STATUS_FAILED if any(s.status == STATUS_FAILED for s in self.stages) else STATUS_OK

    def stage(self, name: str) -> Optional[StageRecord]:
        for record in self.stages:
            if record.name == name:
                return record
        return None

    def put_stage(self, record: StageRecord) -> None:
        """Replace any earlier record of the same stage and keep pipeline order"""
        kept = [s for s in self.stages if s.name != record.name] + [record]
        rank = {name: i for i, name in enumerate(STAGE_ORDER)}
        self.stages = sorted(kept, key=lambda s: rank.get(s.name, len(rank)))

    def drop_stages(self, names: Iterable[str]) -> None:
        """Remove stage records along with the summaries those stages produce"""
        names = set(names)
        self.stages = [s for s in self.stages if s.name not in names]
        if "select" in names:
            self.shortfall = 0
        if "train" in names:
            self.failed_models = {}

    def digest_of(self, path: str) -> Optional[str]:
        for out in self.outputs:
            if out.path == path:
                return out.sha256
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "version": self.version,
            "status": self.status,
            "stages": [s.to_dict() for s in self.stages],
            "outputs": [o.to_dict() for o in self.outputs],
            "shortfall": self.shortfall,
            "failed_models": dict(self.failed_models),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(
            config=data.get("config", {}),
            version=data.get("version", ""),
            stages=[StageRecord.from_dict(s) for s in data.get("stages", [])],
            outputs=[OutputRecord(path=o["path"], sha256=o["sha256"]) for o in data.get("outputs", [])],
            shortfall=int(data.get("shortfall", 0)),
            failed_models=dict(data.get("failed_models", {})),
        )
