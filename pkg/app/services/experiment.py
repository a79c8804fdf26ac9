"""
モンテカルロ実験

(n, q0) の各点で trials 回グラフを生成して検出器を走らせ、
AEP（ノード当たりの誤り率）・厳密復元率・証明書の成立率を集計する。
試行 t のシードは base_seed + t。完了した試行は NDJSON のジャーナルに追記し、
同じジャーナルで再実行すると未完了の試行だけを実行する。
"""
from concurrent.futures import ThreadPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple
import csv
import io
import logging
import math
import time

import numpy as np
from pydantic import ValidationError
from scipy.stats import norm

from api.errors import DomainError, InputError, RecoveryError
from api.response_model import AggregateRow, EmpiricalThreshold, ExperimentReport, TrialRecord
from define_model.models import BinaryModelParams, ExperimentConfig, ModelParams
from define_model.settings import resolve_threads
from services.certificate import certify
from services.detect import align_and_score, map_detect, map_partial_y, micro_labels, reveal_mask
from services.graph_io import write_text
from services.ml import ml_bruteforce
from services.sampler import binary_to_general, sample_graph, stream
from services.sdp import build_objective, solve

logger = logging.getLogger(__name__)

CSV_FIELDS = [
    "scenario", "n", "q0", "rho", "xi", "trials", "aep", "aep_ci_lo", "aep_ci_hi",
    "exact_rate", "certified_rate", "mean_ms",
]

# 公開マスク用のストリーム番号（行ストリーム 1..n と重ならない）
REVEAL_STREAM = 1 << 40
UPPER_BOUND_AEP = 1e-4

PointKey = Tuple[int, Optional[float]]


def wilson_interval(successes: int, total: int, confidence: float = 0.95) -> Tuple[float, float]:
    """二項比率の Wilson 区間"""
    if total <= 0:
        return 0.0, 1.0
    z = float(norm.ppf(0.5 + confidence / 2))
    p = successes / total
    denom = 1 + z ** 2 / total
    center = (p + z ** 2 / (2 * total)) / denom
    half = z * math.sqrt(p * (1 - p) / total + z ** 2 / (4 * total ** 2)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == total else min(1.0, center + half)
    return lo, hi


def _model_for(config: ExperimentConfig, q0: Optional[float]) -> Tuple[Optional[BinaryModelParams], ModelParams]:
    if config.binary is None:
        return None, config.params
    binary = config.binary if q0 is None else config.binary.with_q0(q0)
    return binary, binary_to_general(binary)


def _points(config: ExperimentConfig) -> List[PointKey]:
    q0s = config.q0_values if config.q0_values else [config.binary.q0 if config.binary else None]
    return [(n, q0) for n in config.n_values for q0 in q0s]


def run_trial(config: ExperimentConfig, n: int, q0: Optional[float], trial: int) -> TrialRecord:
    """
    1 試行を実行する

    失敗（ドメインエラー、線形代数の例外）は failed=True の記録として返す。
    """
    seed = config.base_seed + trial
    binary, params = _model_for(config, q0)
    rho = binary.rho if binary is not None else None
    xi = binary.xi if binary is not None else None
    started = time.perf_counter()
    certified = None
    try:
        graph = sample_graph(params, n, seed)
        if config.detector == "map":
            if config.revealed_fraction is not None:
                mask = reveal_mask(n, config.revealed_fraction, stream(seed, REVEAL_STREAM))
                result = map_partial_y(graph, params, micro_labels(graph, params), mask, config.likelihood)
            else:
                result = map_detect(graph, params, config.scenario, likelihood=config.likelihood)
            errors = int(result.errors)
        elif config.detector == "ml_bruteforce":
            errors = int(ml_bruteforce(graph, config.scenario, binary).errors)
        else:
            solution = solve(build_objective(graph, binary, config.scenario), seed=seed, keep_factor=False)
            errors = align_and_score(solution.x_hat, graph.x_signs(), "global_sign")
            if config.certify:
                certified = certify(graph, binary, config.scenario, solution.x_hat).is_certified
    except (RecoveryError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.error(f"trial {trial} (n={n}, q0={q0}, seed={seed}) failed: {e}")
        return TrialRecord(
            trial=trial, seed=seed, n=n, scenario=config.scenario, q0=q0, rho=rho, xi=xi,
            errors=n, exact=False, wall_ms=(time.perf_counter() - started) * 1000, failed=True,
        )

    return TrialRecord(
        trial=trial,
        seed=seed,
        n=n,
        scenario=config.scenario,
        q0=q0,
        rho=rho,
        xi=xi,
        errors=errors,
        exact=errors == 0,
        certified=certified,
        wall_ms=(time.perf_counter() - started) * 1000,
    )


def load_journal(path: Optional[str]) -> List[TrialRecord]:
    """NDJSON ジャーナルを読み込む（存在しなければ空）"""
    if path is None or not Path(path).exists():
        return []
    records = []
    try:
        with open(path, 'r', encoding='utf-8') as f:
            for line in f:
                if not line.strip():
                    continue
                records.append(TrialRecord.model_validate_json(line))
    except (OSError, ValidationError) as e:
        raise InputError(f"failed to read journal {path}: {e}")
    return records


def _record_key(record: TrialRecord) -> Tuple[int, Optional[float], int]:
    return record.n, record.q0, record.trial


def aggregate(records: Iterable[TrialRecord], record_timing: bool = True) -> List[AggregateRow]:
    """
    試行記録を (scenario, n, q0) ごとに集計する

    失敗した試行は集計から除き、failed_trials に数える。同じ試行が重複していれば最初の 1 件を使う。
    """
    groups: Dict[tuple, Dict[int, TrialRecord]] = {}
    for record in records:
        key = (record.scenario or "", record.n, record.q0, record.rho, record.xi)
        groups.setdefault(key, {}).setdefault(record.trial, record)

    rows = []
    for key in sorted(groups, key=lambda k: (k[0], k[1], -math.inf if k[2] is None else k[2])):
        scenario, n, q0, rho, xi = key
        trials = [groups[key][t] for t in sorted(groups[key])]
        done = [r for r in trials if not r.failed]
        failed = len(trials) - len(done)
        if failed:
            logger.warning(f"{failed} failed trials excluded at n={n}, q0={q0}")
        if not done:
            continue

        errors = sum(r.errors for r in done)
        nodes = n * len(done)
        aep = errors / nodes
        lo, hi = wilson_interval(errors, nodes)
        certified = [r.certified for r in done if r.certified is not None]
        rows.append(AggregateRow(
            scenario=scenario,
            n=n,
            q0=q0,
            rho=rho,
            xi=xi,
            trials=len(done),
            aep=aep,
            aep_ci_lo=lo,
            aep_ci_hi=hi,
            exact_rate=sum(r.exact for r in done) / len(done),
            certified_rate=(sum(certified) / len(certified)) if certified else None,
            mean_ms=float(np.mean([r.wall_ms for r in done])) if record_timing else None,
            aep_is_upper_bound=aep < UPPER_BOUND_AEP,
            failed_trials=failed,
        ))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def rows_to_csv(rows: List[AggregateRow]) -> str:
    """scenario,n,q0,rho,xi,trials,aep,aep_ci_lo,aep_ci_hi,exact_rate,certified_rate,mean_ms"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([_fmt(getattr(row, field)) for field in CSV_FIELDS])
    return buffer.getvalue()


def aggregate_journal(journal_path: str, record_timing: bool = True) -> List[AggregateRow]:
    """ジャーナルだけから集計をやり直す"""
    if not Path(journal_path).exists():
        raise InputError(f"journal not found: {journal_path}")
    return aggregate(load_journal(journal_path), record_timing)


def run_experiment(config: ExperimentConfig, threads: Optional[int] = None) -> ExperimentReport:
    """
    実験を実行して集計する

    Args:
        config: 実験設定
        threads: 並列数（None なら config.threads、さらに RECOVERY_THREADS）

    Returns:
        ExperimentReport: 集計行。config.output があれば CSV も書き出す
    """
    done = {_record_key(r): r for r in load_journal(config.journal)}
    tasks = [
        (n, q0, t)
        for n, q0 in _points(config)
        for t in range(config.trials)
        if (n, q0, t) not in done
    ]
    if done:
        logger.info(f"Resuming {config.name}: {len(done)} trials journaled, {len(tasks)} remaining")

    journal = None
    if config.journal is not None:
        try:
            Path(config.journal).parent.mkdir(parents=True, exist_ok=True)
            journal = open(config.journal, 'a', encoding='utf-8')
        except OSError as e:
            raise InputError(f"failed to open journal {config.journal}: {e}")

    records = list(done.values())
    workers = resolve_threads(threads if threads is not None else config.threads)
    try:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_trial, config, n, q0, t) for n, q0, t in tasks]
            for future in as_completed(futures):
                record = future.result()
                records.append(record)
                if journal is not None:
                    journal.write(record.model_dump_json() + "\n")
                    journal.flush()
    finally:
        if journal is not None:
            journal.close()

    wanted = set(_points(config))
    records = [r for r in records if (r.n, r.q0) in wanted and r.trial < config.trials]
    rows = aggregate(records, config.record_timing)
    for row in rows:
        logger.info(f"{config.name}: n={row.n} q0={row.q0} aep={row.aep:.3e} exact={row.exact_rate:.3f}")

    if config.output is not None:
        write_text(rows_to_csv(rows), config.output)
    return ExperimentReport(name=config.name, rows=rows, output=config.output, journal=config.journal)


def _success_rate(config: ExperimentConfig, n: int, q0: float) -> Tuple[float, int, int]:
    point = config.model_copy(update={"n_values": [n], "q0_values": [q0], "output": None, "journal": None})
    rows = run_experiment(point).rows
    if not rows:
        raise DomainError(f"every trial failed at q0={q0}")
    row = rows[0]
    successes = int(round(row.exact_rate * row.trials))
    return row.exact_rate, successes, row.trials


def empirical_threshold(
    config: ExperimentConfig,
    q0_range: Tuple[float, float],
    step: float = 0.25,
    n: Optional[int] = None,
) -> EmpiricalThreshold:
    """
    厳密復元率が 0.5 を横切る q0 を二分法で推定する

    各 q0 で同じシード列（base_seed + t）を使う。

    Args:
        config: 二値モデルの実験設定（n_values[0] を使う）
        q0_range: 両端で率が 0.5 をまたぐ区間
        step: 区間幅がこれ以下で止める
        n: ノード数の上書き

    Raises:
        DomainError: 二値モデルでない、または区間が交差点を挟まない
    """
    if config.binary is None:
        raise DomainError("empirical_threshold needs binary model parameters")
    n = config.n_values[0] if n is None else n
    lo, hi = sorted(float(v) for v in q0_range)

    evaluated: Dict[float, Tuple[float, int, int]] = {}

    def rate(q0: float) -> float:
        if q0 not in evaluated:
            evaluated[q0] = _success_rate(config, n, q0)
        return evaluated[q0][0]

    if rate(lo) >= 0.5 or rate(hi) < 0.5:
        raise DomainError(f"success rate does not cross 0.5 on [{lo}, {hi}] at n={n}")
    while hi - lo > step:
        mid = (lo + hi) / 2
        if rate(mid) >= 0.5:
            hi = mid
        else:
            lo = mid

    grid = sorted(evaluated)
    rates = [evaluated[q][0] for q in grid]
    intervals = [wilson_interval(evaluated[q][1], evaluated[q][2]) for q in grid]
    # 後の点の上限が前の点の下限を下回れば単調性の破れ
    monotone = all(intervals[j][1] >= intervals[i][0] for i in range(len(grid)) for j in range(i + 1, len(grid)))
    _, successes, total = evaluated[hi]
    ci_lo, ci_hi = wilson_interval(successes, total)
    return EmpiricalThreshold(
        q0_star=(lo + hi) / 2,
        rate_ci_lo=ci_lo,
        rate_ci_hi=ci_hi,
        q0_grid=grid,
        success_rates=rates,
        monotone=monotone,
    )
