"""thresholds サブコマンド: 厳密復元の閾値を JSON または整形テキストで出力する"""
from typing import List, Optional
import logging

import click

from api.errors import DomainError
from api.response_model import ThresholdReport
from define_model.models import BinaryModelParams
from services.graph_io import dump_json, load_model, write_text
from services.sampler import binary_to_general
from services.thresholds import all_thresholds, beta_from_erasure, partial_reveal_threshold, sdp_threshold

logger = logging.getLogger(__name__)

TEXT_COLUMNS = ("which", "value", "exact_recovery", "critical")


def format_table(reports: List[ThresholdReport]) -> str:
    """列幅をそろえたテキストの表"""
    rows = [list(TEXT_COLUMNS)]
    for report in reports:
        rows.append([report.which, f"{report.value:.6g}", str(report.exact_recovery).lower(),
                     str(report.critical).lower()])
    widths = [max(len(row[k]) for row in rows) for k in range(len(TEXT_COLUMNS))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines) + "\n"


@click.command("thresholds")
@click.option("--params", "params_path", type=click.Path(), required=True, help="Model parameters (JSON/YAML).")
@click.option("--beta1", type=float, default=None, help="Partial reveal: fraction of y revealed is n^(-beta1).")
@click.option("--beta2", type=float, default=None, help="Partial reveal: fraction of y hidden is n^(-beta2).")
@click.option("--epsilon", type=float, default=None, help="Partial reveal: erasure probability (needs --n).")
@click.option("--n", "n", type=int, default=None, help="Node count for --epsilon.")
@click.option("--format", "output_format", type=click.Choice(["json", "text"]), default="json", show_default=True)
def command(params_path: str, beta1: Optional[float], beta2: Optional[float],
            epsilon: Optional[float], n: Optional[int], output_format: str):
    """Print the ThresholdReport list (value > 1 means exact recovery)."""
    params = load_model(params_path)
    reports = []
    if isinstance(params, BinaryModelParams):
        reports.append(sdp_threshold(params, known_y=True))
        reports.append(sdp_threshold(params, known_y=False))
        general = binary_to_general(params)
    else:
        general = params
    reports.extend(all_thresholds(general))

    if epsilon is not None:
        if n is None:
            raise DomainError("--epsilon needs --n")
        beta1, beta2 = beta_from_erasure(epsilon, n)
    if (beta1 is None) != (beta2 is None):
        raise DomainError("give both --beta1 and --beta2")
    if beta1 is not None:
        reports.append(partial_reveal_threshold(general, beta1, beta2))

    if output_format == "text":
        write_text(format_table(reports))
    else:
        dump_json([report.model_dump(mode="json") for report in reports])
