"""
Result documents, CSV projections and eigenvector dumps.
"""

import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Any, List, Optional

import numpy as np
import pandas as pd

from errors import InvariantViolation
from discretization.grid import TruncatedGrid
from engine.verification import VerificationEngine

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOOL_VERSION = '1.0.0'
CSV_COLUMNS = ['index', 'parameter_or_radius', 'lambda', 'residual', 'iterations']


def to_plain(value: Any) -> Any:
    """Convert numpy scalars and arrays, tuples and int keys into JSON-ready values."""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def non_finite_paths(value: Any, path: str = 'results') -> List[str]:
    """Key paths of every NaN or infinite number inside a payload."""
    if isinstance(value, dict):
        return [p for k, v in value.items() for p in non_finite_paths(v, f'{path}.{k}')]
    if isinstance(value, list):
        return [p for i, v in enumerate(value) for p in non_finite_paths(v, f'{path}[{i}]')]
    if isinstance(value, float) and not math.isfinite(value):
        return [path]
    return []


@dataclass
class ResultDocument:
    command: str
    config_echo: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    timings_ms: Dict[str, float] = field(default_factory=dict)
    checks: List[Dict[str, Any]] = field(default_factory=list)
    error: Optional[Dict[str, Any]] = None
    schema_version: int = SCHEMA_VERSION
    tool_version: str = TOOL_VERSION

    def validate(self) -> None:
        """Every numeric field of the results payload must be finite."""
        bad = non_finite_paths(to_plain(self.results))
        if bad:
            raise InvariantViolation(f"Non-finite values in results: {bad[:5]}", {'paths': bad})

    def to_dict(self) -> Dict[str, Any]:
        results = to_plain(self.results)
        document = {
            'schema_version': self.schema_version,
            'command': self.command,
            'config_echo': to_plain(self.config_echo),
            'results': results,
            'results_digest': VerificationEngine.hash_result(results),
            'timings_ms': to_plain(self.timings_ms),
            'tool_version': self.tool_version,
            'checks': to_plain(self.checks),
        }
        if self.error is not None:
            document['error'] = to_plain(self.error)
        return document

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=True)


class ReportWriter:
    """Writes result documents and their projections under one output directory."""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(output_dir) if output_dir else None
        if self.output_dir is not None:
            self.output_dir.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str) -> Path:
        return self.output_dir / name

    def write_document(self, document: ResultDocument, name: Optional[str] = None) -> Optional[Path]:
        """Write the JSON document; to stdout when no output directory is configured."""
        text = document.to_json()
        if self.output_dir is None:
            sys.stdout.write(text + '\n')
            return None
        path = self._path(name or f'{document.command}.json')
        path.write_text(text + '\n')
        logger.info(f"Wrote result document {path}")
        return path

    def write_csv(self, rows: List[Dict[str, Any]], name: str) -> Optional[Path]:
        if self.output_dir is None:
            return None
        frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
        path = self._path(name)
        frame.to_csv(path, index=False)
        logger.info(f"Wrote {len(frame)} rows to {path}")
        return path

    def dump_eigenvector(self, grid: TruncatedGrid, vector: np.ndarray, name: str = 'eigenvector') -> Optional[Path]:
        """
        Flat little-endian float64 array in global index order plus a sidecar
        JSON describing the grid so plots can be rebuilt outside the tool.
        """
        if self.output_dir is None:
            return None
        data_path = self._path(f'{name}.bin')
        np.asarray(vector, dtype='<f8').tofile(data_path)
        sidecar = {
            'file': data_path.name,
            'dtype': 'float64-le',
            'R': grid.R,
            'h': grid.h,
            'shape': grid.shape,
            'sides': list(grid.sides),
            'N': grid.N,
            'block_layout': {k: list(v) for k, v in grid.block_layout.items()},
            'node_ordering': 'road left to right, then each side row-major bottom-up (j outer, k inner)',
            'road_k': grid.road_k.tolist(),
            'field_lattice': grid.field_lattice.tolist(),
        }
        sidecar_path = self._path(f'{name}.json')
        sidecar_path.write_text(json.dumps(sidecar, sort_keys=True, indent=2) + '\n')
        logger.info(f"Dumped eigenvector to {data_path}")
        return data_path
