"""
MetricReport and its writers.

report.json holds scalars (each with a flag list), curves, per-case
records, diagnostics, the metric plan and a provenance block. Curves are
also written as CSV tables with a header row for external plotting.
"""

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Mapping, Optional

import pandas as pd

logger = logging.getLogger(__name__)

CURVE_FILES = {
    'froc': 'froc.csv',
    'pr': 'pr.csv',
    'calibration': 'calibration.csv',
    'froc_sweep': 'froc_sweep.csv',
}


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(',', ':'), allow_nan=False)


def config_hash(config: Mapping) -> str:
    """sha256 of the canonical JSON form of a run config"""
    return hashlib.sha256(canonical_json(config).encode('utf-8')).hexdigest()


def make_provenance(config: Mapping, seed: int, tool_version: str,
                    created_at: Optional[str] = None) -> Dict[str, Any]:
    return {
        'config_hash': config_hash(config),
        'seed': int(seed),
        'tool_version': tool_version,
        'created_at': created_at or datetime.now(timezone.utc).isoformat(timespec='seconds'),
    }


@dataclass
class MetricReport:
    scalars: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    curves: Dict[str, List[Dict[str, Any]]] = field(default_factory=dict)
    per_case: List[Dict[str, Any]] = field(default_factory=list)
    diagnostics: List[Dict[str, Any]] = field(default_factory=list)
    plan: Optional[Dict[str, Any]] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def add_scalar(self, name: str, value: Optional[float], flags: Optional[List[str]] = None, **extra):
        entry = {'value': None if value is None else float(value), 'flags': list(flags or [])}
        entry.update(extra)
        self.scalars[name] = entry

    def value(self, name: str) -> Optional[float]:
        return self.scalars[name]['value']

    def flags(self, name: str) -> List[str]:
        return self.scalars[name]['flags']

    def to_dict(self) -> Dict[str, Any]:
        return {
            'scalars': self.scalars,
            'curves': self.curves,
            'per_case': self.per_case,
            'diagnostics': self.diagnostics,
            'plan': self.plan,
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> 'MetricReport':
        missing = [key for key in ('scalars', 'curves', 'per_case', 'diagnostics', 'provenance') if key not in data]
        if missing:
            raise ValueError(f'report is missing sections {missing}')
        for name, entry in data['scalars'].items():
            if 'flags' not in entry:
                raise ValueError(f'scalar "{name}" has no flag list')
        return cls(
            scalars={k: dict(v) for k, v in data['scalars'].items()},
            curves={k: [dict(p) for p in v] for k, v in data['curves'].items()},
            per_case=[dict(c) for c in data['per_case']],
            diagnostics=[dict(d) for d in data['diagnostics']],
            plan=data.get('plan'),
            provenance=dict(data['provenance']),
        )

    def body(self) -> Dict[str, Any]:
        """Report content without the creation timestamp"""
        data = self.to_dict()
        data['provenance'] = {k: v for k, v in self.provenance.items() if k != 'created_at'}
        return data

    def body_json(self) -> str:
        return json.dumps(self.body(), sort_keys=True, indent=2, allow_nan=False)


def write_report(report: MetricReport, out_dir: str, name: str = 'report') -> Dict[str, str]:
    """Write <name>.json and one CSV per nonempty curve; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    report_path = os.path.join(out_dir, f'{name}.json')
    with open(report_path, 'w', encoding='utf-8') as handle:
        json.dump(report.to_dict(), handle, sort_keys=True, indent=2, allow_nan=False)
        handle.write('\n')
    paths['report'] = report_path

    prefix = '' if name == 'report' else f'{name}_'
    for curve, filename in CURVE_FILES.items():
        points = report.curves.get(curve)
        if not points:
            continue
        curve_path = os.path.join(out_dir, prefix + filename)
        pd.DataFrame(points).to_csv(curve_path, index=False)
        paths[curve] = curve_path
    logger.info(f'Wrote report to {report_path} ({len(paths) - 1} curve tables)')
    return paths


def read_report(path: str) -> MetricReport:
    with open(path, 'r', encoding='utf-8') as handle:
        return MetricReport.from_dict(json.load(handle))


def summary_table(report: MetricReport) -> pd.DataFrame:
    """One row per scalar: value and comma-joined flags"""
    rows = [{'metric': name, 'value': entry['value'], 'flags': ','.join(entry['flags'])}
            for name, entry in sorted(report.scalars.items())]
    return pd.DataFrame(rows, columns=['metric', 'value', 'flags'])
