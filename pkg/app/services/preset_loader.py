"""
実験プリセットの読み込みサービス

experiments.yaml から名前付きの実験設定と図のパラメータを読み込みます。
"""

from pathlib import Path
from typing import Dict, List, Optional, Union
import logging

import yaml
from pydantic import ValidationError

from api.errors import DomainError, InputError
from define_model.models import ExperimentConfig

logger = logging.getLogger(__name__)

TABLE_PREFIXES = {"I": "table1_", "II": "table2_"}


class PresetLoader:
    """プリセット名から ExperimentConfig へのマッピングを提供"""

    def __init__(self, presets_yaml_path: Optional[str] = None):
        """
        Args:
            presets_yaml_path: experiments.yaml ファイルのパス
                               None の場合、デフォルトパスを使用
        """
        self.experiments: Dict[str, dict] = {}
        self.figures: Dict[str, dict] = {}
        self.source: Optional[str] = None
        self._load_presets_yaml(presets_yaml_path)

    def _load_presets_yaml(self, yaml_path: Optional[str] = None):
        """experiments.yaml からプリセットを読み込み"""
        if yaml_path is None:
            default_paths = [
                Path(__file__).parent.parent / "experiments.yaml",  # app/ 直下
                Path.cwd() / "experiments.yaml",
            ]
            for path in default_paths:
                if path.exists():
                    yaml_path = str(path)
                    break

        if yaml_path is None or not Path(yaml_path).exists():
            logger.warning(f"experiments.yaml not found at {yaml_path}. No presets are available.")
            return

        try:
            with open(yaml_path, 'r', encoding='utf-8') as f:
                data = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise InputError(f"failed to load presets from {yaml_path}: {e}")
        if not isinstance(data, dict):
            raise InputError(f"{yaml_path}: top level must be a mapping")

        self.experiments = dict(data.get('experiments') or {})
        self.figures = dict(data.get('figures') or {})
        self.source = yaml_path
        logger.info(
            f"Loaded {len(self.experiments)} experiment presets and "
            f"{len(self.figures)} figure presets from {yaml_path}"
        )

    def names(self) -> List[str]:
        return sorted(self.experiments)

    def get_experiment(self, name: str) -> ExperimentConfig:
        """
        プリセット名から実験設定を作る

        Args:
            name: プリセット名 (例: "table1_sbm_known")

        Returns:
            ExperimentConfig: name にはプリセット名が入る

        Raises:
            DomainError: 未知のプリセット名、または設定が不正
        """
        if name not in self.experiments:
            raise DomainError(f"unknown preset '{name}'; available: {', '.join(self.names()) or 'none'}")
        try:
            return ExperimentConfig.model_validate({**self.experiments[name], "name": name})
        except ValidationError as e:
            raise DomainError(f"preset '{name}' is invalid: {e}")

    def get_figure(self, figure: int) -> Optional[dict]:
        """図番号のパラメータ {q1, q2, q3, xi}（なければ None）"""
        entry = self.figures.get(f"figure{figure}")
        if entry is None:
            return None
        return {
            "q1": float(entry["q1"]),
            "q2": float(entry["q2"]),
            "q3": float(entry["q3"]),
            "xi": None if entry.get("xi") is None else float(entry["xi"]),
        }

    def table_rows(self, table: Union[str, int]) -> List[ExperimentConfig]:
        """表 I / II の全列（SBM・CBM、y 既知・未知）の実験設定"""
        key = {1: "I", 2: "II"}.get(table, str(table).upper())
        if key not in TABLE_PREFIXES:
            raise DomainError(f"unknown table {table}; choose I or II")
        prefix = TABLE_PREFIXES[key]
        return [self.get_experiment(name) for name in self.names() if name.startswith(prefix)]


# シングルトンインスタンス
_preset_loader_instance: Optional[PresetLoader] = None


def get_preset_loader() -> PresetLoader:
    """PresetLoaderのシングルトンインスタンスを取得"""
    global _preset_loader_instance

    if _preset_loader_instance is None:
        _preset_loader_instance = PresetLoader()

    return _preset_loader_instance


def table_rows(table: Union[str, int]) -> List[ExperimentConfig]:
    return get_preset_loader().table_rows(table)
