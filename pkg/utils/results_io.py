import os
import json
import logging
from typing import Dict, List, Union

import pandas as pd

from utils.errors import ResultsIOError
from utils.stats import CSV_COLUMNS, RunSummary

logger = logging.getLogger(__name__)


def _as_list(summaries: Union[RunSummary, List[RunSummary]]) -> List[RunSummary]:
    return [summaries] if isinstance(summaries, RunSummary) else list(summaries)


def emit_results(summaries: Union[RunSummary, List[RunSummary]], fmt: str, path: str) -> str:
    """
    Writes run summaries to path.

    Args:
        summaries: One summary or a list of them.
        fmt: 'csv' (header always written, columns in CSV_COLUMNS order) or
            'json' (object with a 'runs' list).
        path: Destination file; parent directories are created.

    Returns:
        The path written.

    Raises:
        ResultsIOError: if the file cannot be written or fmt is unknown.
    """
    rows = _as_list(summaries)
    try:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        if fmt == "csv":
            pd.DataFrame([s.to_row() for s in rows], columns=CSV_COLUMNS).to_csv(path, index=False)
        elif fmt == "json":
            with open(path, "w") as f:
                json.dump({"runs": [s.to_dict() for s in rows]}, f, indent=2, sort_keys=True)
        else:
            raise ResultsIOError(path, f"unknown format {fmt!r}")
    except OSError as e:
        if isinstance(e, ResultsIOError):
            raise
        raise ResultsIOError(path, str(e))
    logger.info(f"Wrote {len(rows)} run(s) to {path}")
    return path


def read_results(path: str) -> List[Dict]:
    """Reads a file written by emit_results back into a list of row dicts."""
    if not os.path.exists(path):
        raise ResultsIOError(path, "file not found")
    try:
        if path.endswith(".json"):
            with open(path, "r") as f:
                return json.load(f)["runs"]
        return pd.read_csv(path).to_dict("records")
    except (OSError, ValueError, KeyError) as e:
        raise ResultsIOError(path, str(e))
