"""
Run record logging that writes CSV and a JSON mirror
"""

import csv
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Dict, List, Optional, Union

logger = logging.getLogger(__name__)


class HistoryLogger:
    """Appends flat rows to ``<name>.csv`` and ``<name>.json`` under a directory"""

    def __init__(self, log_dir: Union[str, Path], name: str = "history",
                 timestamps: bool = True, json_mirror: bool = True, overwrite: bool = False):
        self.log_dir = Path(log_dir)
        self.log_dir.mkdir(parents=True, exist_ok=True)
        self.csv_file = self.log_dir / f"{name}.csv"
        self.json_file = self.log_dir / f"{name}.json"
        self.timestamps = timestamps
        self.json_mirror = json_mirror
        if overwrite:
            for path in (self.csv_file, self.json_file):
                path.unlink(missing_ok=True)

    def log(self, row: Dict) -> Dict:
        """Append one row; a timestamp column leads when enabled"""
        entry = {"timestamp": datetime.now().isoformat()} if self.timestamps else {}
        entry.update(row)
        self._log_to_csv(entry)
        if self.json_mirror:
            self._log_to_json(entry)
        return entry

    def log_many(self, rows: List[Dict]) -> None:
        for row in rows:
            self.log(row)

    def _log_to_csv(self, data: Dict) -> None:
        """Append to the CSV file, writing the header when the file is new"""
        file_exists = self.csv_file.exists()
        with open(self.csv_file, "a", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=list(data.keys()))
            if not file_exists:
                writer.writeheader()
            writer.writerow(data)

    def _log_to_json(self, data: Dict) -> None:
        entries = []
        if self.json_file.exists():
            with open(self.json_file, "r", encoding="utf-8") as f:
                try:
                    entries = json.load(f)
                except json.JSONDecodeError:
                    logger.warning("%s is not valid JSON; starting a new array", self.json_file)
                    entries = []
        entries.append(data)
        with open(self.json_file, "w", encoding="utf-8") as f:
            json.dump(entries, f, indent=2)

    def read_rows(self) -> List[Dict[str, str]]:
        if not self.csv_file.exists():
            return []
        with open(self.csv_file, "r", encoding="utf-8") as f:
            return list(csv.DictReader(f))


def write_rows(path: Union[str, Path], rows: List[Dict],
               fieldnames: Optional[List[str]] = None) -> Path:
    """Write a whole table at once (overwrites)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fieldnames is None:
        fieldnames = []
        for row in rows:
            fieldnames.extend(k for k in row if k not in fieldnames)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
    return path


def write_json(path: Union[str, Path], payload) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
    return path
