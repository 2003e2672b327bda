"""
Append-only run store: one JSON file per record under the runs directory.
"""

import logging
import os
from pathlib import Path
from typing import List, Optional, Union

from .records import RunRecord
from .limits import Verdict

logger = logging.getLogger(__name__)


class RecordExistsError(FileExistsError):
    pass


class RunStore:
    """Keeps qualification records as runs/<YYYYmmddTHHMMSSZ>_<runid>.json; never rewrites a file."""

    def __init__(self, storage_dir: Optional[Union[str, Path]] = None):
        self.storage_dir = Path(storage_dir or os.getenv("CRYOLNA_RUNS_DIR", "runs"))
        self.storage_dir.mkdir(parents=True, exist_ok=True)

    def get_record_file_path(self, record: RunRecord) -> Path:
        return self.storage_dir / f"{record.stamp}_{record.run_id}.json"

    def artifact_dir(self, run_id: str) -> Path:
        path = self.storage_dir / "artifacts" / run_id
        path.mkdir(parents=True, exist_ok=True)
        return path

    def save_record(self, record: RunRecord) -> Path:
        record_file = self.get_record_file_path(record)
        try:
            with open(record_file, "x", encoding="utf-8") as f:
                f.write(record.to_json())
        except FileExistsError as e:
            raise RecordExistsError(f"record {record_file.name} already exists; records are immutable") from e
        logger.info(f"Saved run record {record_file}")
        return record_file

    def find_record(self, run_id: str) -> Optional[Path]:
        matches = sorted(self.storage_dir.glob(f"*_{run_id}.json"))
        return matches[-1] if matches else None

    def load_record(self, run_id_or_path: Union[str, Path]) -> RunRecord:
        path = Path(run_id_or_path)
        if not path.exists():
            found = self.find_record(str(run_id_or_path))
            if found is None:
                raise FileNotFoundError(f"no run record {run_id_or_path!r} in {self.storage_dir}")
            path = found
        return RunRecord.load(path)

    def list_records(self) -> List[Path]:
        return sorted(self.storage_dir.glob("*_*.json"))

    def latest_pass(self, phase: int = 1, testbed_hash: Optional[str] = None) -> Optional[RunRecord]:
        for path in reversed(self.list_records()):
            try:
                record = RunRecord.load(path)
            except Exception as e:
                logger.warning(f"Skipping unreadable record {path.name}: {e}")
                continue
            if record.phase != phase or record.verdict is not Verdict.PASS:
                continue
            if testbed_hash is not None and record.testbed_hash != testbed_hash:
                continue
            return record
        return None
