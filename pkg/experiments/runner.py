"""
Scan execution: task fan-out over a bounded worker pool, the result CSV, the
witness archive and the re-derivation of witnessed rows.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import List, NamedTuple, Optional, Union

import pandas as pd

from experiments import dimscan, identities, sector, semigroup, square_function
from experiments.rows import COLUMNS, ResultRow, ScanTask, WitnessStore, make_system, parse_detail, witness_path
from operators.exceptions import SchemaError
from operators.hermite import HermiteTruncation, gauss_hermite, hermite_ratio, riesz_hermite_operator
from operators.pnorm import ratio
from utils.config import ExperimentConfig
from utils.validators import DEFAULT_MEM_CAP

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED_ROWS = 2

VERIFY_TOL = 1e-12


class RunResult(NamedTuple):
    rows: List[ResultRow]
    exit_code: int
    csv_path: Path
    witness_path: Path


def build_tasks(config: ExperimentConfig) -> List[ScanTask]:
    """Every scan task of the configuration, in config order"""
    tasks: List[ScanTask] = []
    for experiment in config.experiment:
        if experiment == "dimscan":
            tasks.extend(dimscan.build_tasks(config))
        elif experiment == "contraction":
            tasks.extend(semigroup.build_tasks(config))
        elif experiment == "sector-sup":
            tasks.extend(sector.build_tasks(config))
        elif experiment == "square-function":
            tasks.extend(square_function.build_tasks(config))
        else:
            tasks.extend(identities.build_tasks(config, experiment))
    return tasks


def execute(task: ScanTask) -> List[ResultRow]:
    """Run one task; an exception becomes a single error row"""
    start = time.perf_counter()
    try:
        rows = task.run()
    except Exception as e:
        logger.error(f"{task.base.experiment} row failed (K={task.base.K} N={task.base.N} d={task.base.d} "
                     f"p={task.base.p} r={task.base.r}): {e}")
        rows = [replace(task.base, status=f"error: {e}")]
    elapsed = (time.perf_counter() - start) * 1000.0
    return [row if row.runtime_ms is not None else replace(row, runtime_ms=elapsed / len(rows)) for row in rows]


def write_results(rows: List[ResultRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame([row.cells() for row in rows], columns=list(COLUMNS))
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def read_results(path: Union[str, Path]) -> pd.DataFrame:
    """Load a result CSV as text cells, checking the header"""
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path} is empty; a header row is mandatory")
    if tuple(df.columns) != COLUMNS:
        raise SchemaError(f"{path} does not carry the result columns {', '.join(COLUMNS)}")
    return df


def run(config: ExperimentConfig) -> RunResult:
    """
    Execute the scan and write `<out>` plus `<out stem>.witnesses.npz`

    Rows come back in config order whatever the completion order. The exit
    code is 0 when every row is ok and 2 otherwise; rows are written either way.
    """
    tasks = build_tasks(config)
    logger.info(f"Running {len(tasks)} tasks on {config.jobs} worker(s)")
    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
        results = list(pool.map(execute, tasks))

    store = WitnessStore()
    rows: List[ResultRow] = []
    for task_rows in results:
        for row in task_rows:
            if row.witness is not None:
                row = replace(row, witness_digest=store.add(row.witness))
            rows.append(row)

    csv_path = write_results(rows, config.out)
    npz_path = witness_path(csv_path)
    store.save(npz_path)

    bad = [row for row in rows if row.status != "ok"]
    for row in bad:
        logger.warning(f"{row.experiment} d={row.d} p={row.p} r={row.r}: {row.status}")
    logger.info(f"Wrote {len(rows)} rows to {csv_path} ({len(store)} witnesses)")
    return RunResult(rows, EXIT_FAILED_ROWS if bad else EXIT_OK, csv_path, npz_path)


class VerifiedRow(NamedTuple):
    index: int
    expected: float
    recomputed: float
    ok: bool


def _number(text: str) -> Optional[float]:
    return float(text) if text != "" else None


def rederive(record: pd.Series, witness, mem_cap: int = DEFAULT_MEM_CAP) -> float:
    """Re-apply the operator a dimscan row refers to and recompute its ratio"""
    if record["experiment"] != "dimscan":
        raise SchemaError(f"rows of {record['experiment']} carry no norm witness")
    detail = parse_detail(record["detail"])
    d, r, p = int(record["d"]), int(record["r"]), float(record["p"])
    if record["setting"] == "cyclic":
        system = make_system(int(record["K"]), d, detail.get("measure", "g0"), int(detail.get("g0", 1)), mem_cap)
        return ratio(system.as_operator("riesz", r=r), witness, p)

    trunc = HermiteTruncation(d, int(record["N"]), mem_cap)
    if p == 2:
        return ratio(riesz_hermite_operator(trunc, r), witness, p)
    return hermite_ratio(r, p, witness, trunc, gauss_hermite(int(detail["quad_nodes"])))


def verify(csv_path: Union[str, Path], witnesses: Optional[Union[str, Path]] = None,
           mem_cap: int = DEFAULT_MEM_CAP) -> List[VerifiedRow]:
    """Check that each witnessed row's lower bound is reproduced from its stored witness"""
    df = read_results(csv_path)
    store = WitnessStore.load(witnesses or witness_path(csv_path))
    checked = []
    for index, record in df.iterrows():
        digest = record["witness_digest"]
        if not digest:
            continue
        witness = store.get(digest)
        expected = _number(record["estimate_lower"])
        if witness is None or expected is None:
            logger.error(f"row {index}: witness {digest} missing from the archive")
            checked.append(VerifiedRow(int(index), expected or math.nan, math.nan, False))
            continue
        recomputed = rederive(record, witness, mem_cap)
        ok = abs(recomputed - expected) <= VERIFY_TOL * max(1.0, abs(expected))
        if not ok:
            logger.warning(f"row {index}: stored {expected!r}, recomputed {recomputed!r}")
        checked.append(VerifiedRow(int(index), expected, recomputed, ok))
    logger.info(f"Verified {len(checked)} witnessed rows")
    return checked
