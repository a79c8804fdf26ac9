"""
コマンドラインのエントリポイント

サブコマンド: sample, thresholds, region, detect, solve, simulate, figures
終了コード: 0 成功, 1 ドメインエラー/不正な引数, 2 入出力エラー
ログは標準エラーへ出力し、標準出力は JSON または CSV のみとする。
"""
from typing import List, Optional
import logging
import sys

import click
from pydantic import ValidationError

from api.errors import RecoveryError
from api.route import detect, figures, region, sample, simulate, solve, thresholds

logger = logging.getLogger(__name__)

LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


@click.group()
@click.option("--log-level", type=click.Choice(LOG_LEVELS, case_sensitive=False), default="WARNING",
              show_default=True, help="Log level for messages written to stderr.")
@click.option("--threads", type=click.IntRange(min=1), default=None,
              help="Worker threads (overrides RECOVERY_THREADS).")
@click.pass_context
def cli(ctx: click.Context, log_level: str, threads: Optional[int]):
    """Exact recovery of communities under two latent variables."""
    logging.basicConfig(
        level=getattr(logging, log_level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    ctx.ensure_object(dict)
    ctx.obj["threads"] = threads


cli.add_command(sample.command)
cli.add_command(thresholds.command)
cli.add_command(region.command)
cli.add_command(detect.command)
cli.add_command(solve.command)
cli.add_command(simulate.command)
cli.add_command(figures.command)


def dispatch(argv: Optional[List[str]] = None) -> int:
    """
    argv を実行して終了コードを返す

    Args:
        argv: サブコマンドと引数（None なら sys.argv[1:]）

    Returns:
        int: 0 成功、1 ドメインエラー・検証エラー・使い方の誤り、2 入出力エラー
    """
    try:
        result = cli.main(args=argv, prog_name="recovery", standalone_mode=False, obj={})
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except RecoveryError as e:
        logger.debug(f"exit code {e.exit_code}: {e.detail}")
        click.echo(f"Error: {e.detail}", err=True)
        return e.exit_code
    except ValidationError as e:
        click.echo(f"Error: invalid parameters\n{e}", err=True)
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(dispatch())
