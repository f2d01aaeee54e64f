"""Tabular results with CSV serialization."""

import csv
import json
from dataclasses import dataclass, field

import numpy as np


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_header(fh, metadata):
    for key in sorted(metadata):
        fh.write(f"# {key}: {json.dumps(metadata[key], sort_keys=True, default=str)}\n")


@dataclass
class SweepTable:
    """Rows of a parameter study.

    ``checks`` holds the hard assertions (name -> bool), ``info`` soft
    diagnostics such as fitted slopes.
    """

    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)

    def column(self, name):
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    @property
    def passed(self):
        return all(self.checks.values())

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_header(fh, {**self.metadata, "checks": self.checks})
            w = csv.writer(fh)
            w.writerow(self.columns)
            for r in self.rows:
                w.writerow([_fmt(r.get(c)) for c in self.columns])
