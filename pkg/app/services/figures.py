"""
厳密復元領域の図（境界 CSV と gnuplot スクリプト）

図 2/4: q2 = 3, q1 = q3 = 1、図 3/5: q1 = q2 = q3 = 1、図 4/5 は ξ = 0.1 の検閲モデル。
各図に y 既知・y 未知の 2 本の境界を出力する。
"""
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union
import logging

import numpy as np

from api.errors import DomainError
from api.response_model import FigureReport, RegionSweepResult
from define_model.models import BinaryModelParams
from services.graph_io import write_text
from services.preset_loader import get_preset_loader
from services.thresholds import region_csv, region_sweep

logger = logging.getLogger(__name__)

# 図番号 -> (q1, q2, q3, xi)
FIGURE_PARAMS: Dict[int, tuple] = {
    2: (1.0, 3.0, 1.0, None),
    3: (1.0, 1.0, 1.0, None),
    4: (1.0, 3.0, 1.0, 0.1),
    5: (1.0, 1.0, 1.0, 0.1),
}
Q0_UPPER = 1000.0


def default_rho_grid() -> List[float]:
    return [round(r, 2) for r in np.arange(0.02, 0.99, 0.02)]


def figure_parameters(figure: int) -> tuple:
    """図のパラメータ (q1, q2, q3, xi)。プリセットにあればそちらを優先する"""
    if figure not in FIGURE_PARAMS:
        raise DomainError(f"unknown figure {figure}; choose from {sorted(FIGURE_PARAMS)}")
    preset = get_preset_loader().get_figure(figure)
    if preset is None:
        return FIGURE_PARAMS[figure]
    return preset["q1"], preset["q2"], preset["q3"], preset["xi"]


def figure_base(figure: int) -> BinaryModelParams:
    q1, q2, q3, xi = figure_parameters(figure)
    return BinaryModelParams(q0=max(q1, q2, q3), q1=q1, q2=q2, q3=q3, xi=xi, rho=0.5)


def gnuplot_script(figure: int, csv_name: str) -> str:
    q1, q2, q3, xi = figure_parameters(figure)
    title = f"q1={q1:g}, q2={q2:g}, q3={q3:g}" + (f", xi={xi:g}" if xi is not None else "")
    prefix = "cbm" if xi is not None else "sbm"
    lines = [
        "set datafile separator ','",
        f"set title 'Exact recovery region of x ({title})'",
        "set xlabel 'rho'",
        "set ylabel 'q0'",
        "set key top center",
        f"plot '{csv_name}' using 1:(strcol(3) eq '{prefix}_known_y' ? $2 : 1/0) with lines title 'known y', \\",
        f"     '{csv_name}' using 1:(strcol(3) eq '{prefix}_unknown_y' ? $2 : 1/0) with lines title 'unknown y'",
    ]
    return "\n".join(lines) + "\n"


def reproduce_figure(
    figure: int,
    out_dir: Union[str, Path],
    rho_grid: Optional[Sequence[float]] = None,
    threads: Optional[int] = None,
) -> FigureReport:
    """
    1 枚の図の境界を計算して CSV と gnuplot スクリプトを書く

    Returns:
        FigureReport: 出力パスと、y 既知の境界が y 未知以下だったか
    """
    base = figure_base(figure)
    prefix = "cbm" if base.is_censored else "sbm"
    rho_grid = default_rho_grid() if rho_grid is None else list(rho_grid)
    bounds = (max(base.q1, base.q2, base.q3), Q0_UPPER)

    known = region_sweep(base, f"{prefix}_known_y", rho_grid, bounds, threads)
    unknown = region_sweep(base, f"{prefix}_unknown_y", rho_grid, bounds, threads)

    dominated = [
        k.rho for k, u in zip(known.points, unknown.points) if k.q0_star > u.q0_star + 1e-6
    ]
    if dominated:
        logger.warning(f"figure {figure}: known-y boundary above unknown-y at rho={dominated}")

    out_dir = Path(out_dir)
    csv_path = out_dir / f"figure{figure}.csv"
    script_path = out_dir / f"figure{figure}.gp"
    combined = RegionSweepResult(scenario=f"{prefix}_both", points=known.points + unknown.points)
    write_text(region_csv(combined), csv_path)
    write_text(gnuplot_script(figure, csv_path.name), script_path)
    logger.info(f"Wrote figure {figure} boundaries to {csv_path}")
    return FigureReport(
        figure=figure,
        csv_path=str(csv_path),
        script_path=str(script_path),
        known_dominates=not dominated,
    )


def reproduce_figures(
    figures: Iterable[int] = (2, 3, 4, 5),
    out_dir: Union[str, Path] = ".",
    rho_grid: Optional[Sequence[float]] = None,
    threads: Optional[int] = None,
) -> List[FigureReport]:
    return [reproduce_figure(f, out_dir, rho_grid, threads) for f in figures]
