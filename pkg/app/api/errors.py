"""
例外クラス

exit_code は CLI の終了コードにそのまま対応する（1: ドメインエラー, 2: 入出力エラー）。
"""


class RecoveryError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DomainError(RecoveryError, ValueError):
    """Invalid arguments for a mathematical operation."""
    exit_code = 1


class InputError(RecoveryError):
    """Unreadable, unwritable or malformed files."""
    exit_code = 2
