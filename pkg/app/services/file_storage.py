import json
import logging
from pathlib import Path
from typing import Optional, Union

import pandas as pd

from app import settings
from .core import ScenarioReport
from .utils import to_jsonable


logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


class ReportStorage:
    """Writes scenario artifacts to a local directory. Output is a pure function of its inputs."""

    def __init__(self, out_dir: Optional[Union[str, Path]] = None):
        self.out_dir = Path(out_dir or settings.OUTPUT_DIR)

    def get_file_fullname(self, file_name: str) -> Path:
        return self.out_dir / file_name

    def _prepare(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def write_table(self, file_name: str, table: pd.DataFrame) -> Path:
        self._prepare()
        target = self.get_file_fullname(file_name)
        table.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, decimal=".", lineterminator="\n")
        logger.debug(f"Wrote {len(table)} rows to {target}.")
        return target

    def write_json(self, file_name: str, content: dict) -> Path:
        self._prepare()
        target = self.get_file_fullname(file_name)
        text = json.dumps(to_jsonable(content), sort_keys=True, indent=2, allow_nan=False)
        target.write_text(text + "\n", encoding="utf-8")
        logger.debug(f"Wrote {target}.")
        return target

    def save_report(self, report: ScenarioReport) -> dict:
        written = {"verdict": self.write_json(f"{report.name}.verdict.json", report.summary())}
        if report.table is not None:
            written["table"] = self.write_table(f"{report.name}.csv", report.table)
        else:
            logger.warning(f"Scenario '{report.name}' produced no path table; only the verdict report is written.")
        return written

    def save_sweep(self, name: str, table: pd.DataFrame) -> Path:
        return self.write_table(f"{name}.sweep.csv", table)
