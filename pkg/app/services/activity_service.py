"""
Activity Service
Times pipeline stages and keeps the run manifest in step with the files on disk.
"""
import logging
import os
import time
from contextlib import contextmanager
from typing import Any, Callable, Dict, Iterable, Iterator, Optional

from config.settings import VERSION
from models.errors import StageError
from models.manifest import STATUS_FAILED, STATUS_OK, OutputRecord, RunManifest, StageRecord
from storage import artifact_store

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"


class ActivityService:

    def __init__(self, out_dir: str, config: Dict[str, Any], tracked: Optional[Callable[[str], bool]] = None):
        self.out_dir = out_dir
        self.tracked = tracked
        path = os.path.join(out_dir, MANIFEST_FILE)
        if os.path.isfile(path):
            self.manifest = RunManifest.from_dict(artifact_store.read_json(path))
            self.manifest.config = config
            self.manifest.version = VERSION
        else:
            self.manifest = RunManifest(config=config, version=VERSION)

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        """Run a block as a named stage; failures are recorded and re-raised as StageError"""
        logger.info("[pipeline:%s] start", name)
        start = time.perf_counter()
        try:
            yield
        except Exception as exc:
            self.log_activity(name, start, STATUS_FAILED, str(exc))
            self.save()
            if isinstance(exc, StageError):
                raise
            raise StageError(name, exc) from exc
        self.log_activity(name, start, STATUS_OK)
        self.save()

    def log_activity(self, name: str, start: float, status: str, error: str = "") -> None:
        millis = round((time.perf_counter() - start) * 1000.0, 3)
        self.manifest.put_stage(StageRecord(name=name, millis=millis, status=status, error=error))
        if status == STATUS_OK:
            logger.info("[pipeline:%s] done in %.0f ms", name, millis)
        else:
            logger.error("[pipeline:%s] FAILED after %.0f ms: %s", name, millis, error)

    def invalidate(self, names: Iterable[str]) -> None:
        """Forget the records of stages whose outputs are about to be rebuilt"""
        self.manifest.drop_stages(names)

    def refresh_outputs(self) -> None:
        """Digest the run's files under out_dir; `tracked` decides which files belong to the run"""
        outputs = []
        for rel in artifact_store.list_files(self.out_dir):
            if rel == MANIFEST_FILE or (self.tracked is not None and not self.tracked(rel)):
                continue
            outputs.append(OutputRecord(path=rel, sha256=artifact_store.file_digest(
                os.path.join(self.out_dir, rel))))
        self.manifest.outputs = outputs

    def save(self) -> str:
        self.refresh_outputs()
        return artifact_store.write_json(os.path.join(self.out_dir, MANIFEST_FILE), self.manifest.to_dict())
