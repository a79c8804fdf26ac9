"""sample サブコマンド: 二潜在変数 SBM/CBM のグラフを生成する"""
from typing import Optional
import logging

import click

from api.errors import DomainError
from define_model.models import BinaryModelParams
from services.graph_io import dump_json, graph_to_dict, load_model
from services.sampler import binary_to_general, sample_graph

logger = logging.getLogger(__name__)


def _parse_q(raw: str):
    try:
        values = [float(v) for v in raw.split(",")]
    except ValueError:
        raise DomainError(f"--q expects four comma-separated numbers, got '{raw}'")
    if len(values) != 4:
        raise DomainError(f"--q expects q0,q1,q2,q3, got {len(values)} values")
    return values


@click.command("sample")
@click.option("--params", "params_path", type=click.Path(), help="Model parameters (JSON/YAML): {m_x, m_y, P, Q, Xi} or {q0, q1, q2, q3, rho, xi}.")
@click.option("--q", "q_values", help="Binary model shorthand: q0,q1,q2,q3.")
@click.option("--rho", type=float, help="Binary model: P(y = +1).")
@click.option("--xi", type=float, default=None, help="Binary model: sign-flip probability (censored model).")
@click.option("--n", "n", type=int, required=True, help="Number of nodes.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Graph JSON path (default: stdout).")
def command(params_path: Optional[str], q_values: Optional[str], rho: Optional[float],
            xi: Optional[float], n: int, seed: int, out: Optional[str]):
    """Sample a graph and write {n, model, x, y, edges: [[u, v, sign], ...]} as JSON."""
    if (params_path is None) == (q_values is None):
        raise DomainError("give exactly one of --params and --q")
    if params_path is not None:
        params = load_model(params_path)
    else:
        if rho is None:
            raise DomainError("--q needs --rho")
        q0, q1, q2, q3 = _parse_q(q_values)
        params = BinaryModelParams(q0=q0, q1=q1, q2=q2, q3=q3, rho=rho, xi=xi)
    if isinstance(params, BinaryModelParams):
        params = binary_to_general(params)

    graph = sample_graph(params, n, seed)
    logger.info(f"Sampled {graph.model} graph with n={n}, seed={seed}")
    dump_json(graph_to_dict(graph), out)
