"""Scan of the three-box mixture slice comparing Uffink, the eps-envelope and the arcsine criterion."""

import csv
import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import List, Optional, TextIO, Union

import numpy as np

from ..core.inequality import epsilon_envelope, tlm_quantum_boundary, uffink
from ..core.nsbox import BiasTable, biases, fig2_boxes, fig2_mixture
from ..shared.config import REGION_Q2_MAX, Config
from ..shared.errors import DomainError
from ..shared.schemas import Check, ExperimentResult, RegionRow
from .runners import WITNESS, check, finish

logger = logging.getLogger(__name__)

CSV_COLUMNS = [
    "q1",
    "q2",
    "uffink_lhs",
    "envelope_lhs",
    "envelope_eps",
    "tlm_quantum",
    "uffink_ok",
    "envelope_ok",
]


@dataclass
class RegionScan:
    grid_step: float
    rows: List[RegionRow]
    checks: List[Check] = field(default_factory=list)
    runtime_s: float = 0.0

    def write_csv(self, handle: TextIO) -> None:
        writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.model_dump())

    def to_csv(self, path: Union[str, Path]) -> None:
        with open(path, "w", newline="") as handle:
            self.write_csv(handle)

    def as_result(self) -> ExperimentResult:
        return ExperimentResult(
            name="fig2",
            parameters={"grid_step": self.grid_step},
            values={
                "points": len(self.rows),
                "uffink_ok": sum(r.uffink_ok for r in self.rows),
                "envelope_ok": sum(r.envelope_ok for r in self.rows),
                "tlm_quantum": sum(r.tlm_quantum for r in self.rows),
            },
            checks=self.checks,
            runtime_s=self.runtime_s,
        )


def region_row(q1: float, q2: float, e: np.ndarray) -> RegionRow:
    tol = Config.VIOLATION_TOLERANCE
    bias_table_lhs = uffink().lhs(BiasTable.from_binary(e))
    envelope, argmax = epsilon_envelope(e)
    return RegionRow(
        q1=q1,
        q2=q2,
        uffink_lhs=bias_table_lhs,
        envelope_lhs=envelope,
        envelope_eps=argmax,
        tlm_quantum=tlm_quantum_boundary(e[0, 0], e[0, 1], e[1, 0], e[1, 1]),
        uffink_ok=bias_table_lhs <= 4.0 + tol,
        envelope_ok=envelope <= 4.0 + tol,
    )


def _scan_row(args) -> List[RegionRow]:
    q2, step = args
    # biases are linear in the mixture weights
    components = [biases(box).binary for box in fig2_boxes()]
    rows = []
    for k in range(int(round((1.0 - q2) / step + 1e-9)) + 1):
        q1 = round(k * step, 12)
        weights = (1.0 - q1 - q2, q1, q2)
        e = np.clip(sum(w * c for w, c in zip(weights, components)), -1.0, 1.0)
        rows.append(region_row(q1, q2, e))
    return rows


def scan(grid_step: float, jobs: Optional[int] = None) -> List[RegionRow]:
    jobs = Config.JOBS if jobs is None else jobs
    q2_values = [
        round(l * grid_step, 12)
        for l in range(int(round(REGION_Q2_MAX / grid_step)) + 1)
    ]
    tasks = [(q2, grid_step) for q2 in q2_values]
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            chunks = pool.map(_scan_row, tasks)
    else:
        chunks = [_scan_row(task) for task in tasks]
    return [row for chunk in chunks for row in chunk]


def repro_fig2(grid_step: float = 0.005, jobs: Optional[int] = None) -> RegionScan:
    if grid_step > 0.01:
        raise DomainError(f"grid_step must be at most 0.01, got {grid_step}")
    started = time.perf_counter()
    rows = scan(grid_step, jobs)

    envelope_in_uffink = all(r.uffink_ok for r in rows if r.envelope_ok)
    tlm_in_envelope = [r for r in rows if r.tlm_quantum and not r.envelope_ok]
    if tlm_in_envelope:
        logger.warning(f"{len(tlm_in_envelope)} quantum points violate the envelope")

    per_row = defaultdict(lambda: [0, 0])
    for r in rows:
        per_row[r.q2][0] += r.envelope_ok
        per_row[r.q2][1] += r.tlm_quantum
    boundary_mismatch = max(abs(a - b) for a, b in per_row.values())

    witness = biases(fig2_mixture(*WITNESS)).binary
    witness_row = region_row(*WITNESS, witness)
    pr_row = region_row(0.0, 0.0, biases(fig2_mixture(0.0, 0.0)).binary)
    local_row = region_row(1.0, 0.0, biases(fig2_mixture(1.0, 0.0)).binary)

    checks = [
        check("envelope-satisfied inside Uffink-satisfied", True, envelope_in_uffink),
        check("quantum points satisfy the envelope", 0, len(tlm_in_envelope)),
        check("envelope and arcsine boundaries within one cell", True, boundary_mismatch <= 1),
        check("witness Uffink LHS", 3.88, witness_row.uffink_lhs, 1e-12),
        check("witness envelope maximum", 4.392, witness_row.envelope_lhs, 1e-3),
        check(
            "witness passes Uffink, fails the envelope, is not quantum",
            [True, False, False],
            [witness_row.uffink_ok, witness_row.envelope_ok, witness_row.tlm_quantum],
        ),
        check(
            "PR corner violates everything",
            [False, False, False],
            [pr_row.uffink_ok, pr_row.envelope_ok, pr_row.tlm_quantum],
        ),
        check(
            "local corner satisfies everything",
            [True, True, True],
            [local_row.uffink_ok, local_row.envelope_ok, local_row.tlm_quantum],
        ),
    ]
    result = finish("fig2", {"grid_step": grid_step}, {"points": len(rows)}, checks, started)
    return RegionScan(grid_step=grid_step, rows=rows, checks=result.checks, runtime_s=result.runtime_s)
