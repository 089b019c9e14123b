"""Report records produced by the suites"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from abnorm.utils.serialization import to_plain

SCHEMA_VERSION = 1


@dataclass
class CheckRecord:
    """One verified claim"""
    name: str
    paper_anchor: str
    values: Dict[str, Any]
    tolerance: Optional[float]
    passed: bool
    error: Optional[str] = None

    def to_dict(self) -> dict:
        record = {
            'name': self.name,
            'paperAnchor': self.paper_anchor,
            'values': to_plain(self.values),
            'tolerance': to_plain(self.tolerance),
            'pass': bool(self.passed),
        }
        if self.error is not None:
            record['error'] = self.error
        return record

    def __repr__(self):
        return f"<CheckRecord(name={self.name}, pass={self.passed})>"


@dataclass
class Report:
    command: str
    config: Dict[str, Any]
    records: List[CheckRecord] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(record.passed for record in self.records)

    def add(self, record: CheckRecord):
        self.records.append(record)

    def extend(self, records: List[CheckRecord]):
        self.records.extend(records)

    def failures(self) -> List[CheckRecord]:
        return [record for record in self.records if not record.passed]

    def to_dict(self, include_timings: bool = True) -> dict:
        report = {
            'schemaVersion': SCHEMA_VERSION,
            'command': self.command,
            'config': to_plain(self.config),
            'records': [record.to_dict() for record in self.records],
            'pass': self.passed,
        }
        if include_timings:
            report['timings'] = {name: round(value, 6) for name, value in self.timings.items()}
        return report

    def to_json(self, include_timings: bool = True) -> str:
        return json.dumps(self.to_dict(include_timings), sort_keys=True, indent=2)

    def __repr__(self):
        return f"<Report(command={self.command}, records={len(self.records)}, pass={self.passed})>"
