from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Any, Dict, Mapping

from ..geometry import GridSpec

ROW_NORMALIZERS = ("height", "width", "diagonal")


@dataclass(frozen=True)
class TemplateConfig:
    """Thresholds shared by the template library.

    Margin comparisons are inclusive and always written as
    ``larger >= ratio * smaller``.
    """

    count_margin_ratio: float = 1.5
    area_margin_ratio: float = 1.5
    rank_gap_ratio: float = 1.5
    depth_margin_ratio: float = 1.5
    separation_margin_px: float = 20.0
    half_image_rule: bool = True
    vertical_overlap_gate: bool = False
    vertical_overlap_min: float = 0.25
    aspect_ratio_threshold: float = 1.2
    buffer_frac: float = 0.02
    grid_margin_frac: float = 0.02
    grid_rows: int = 2
    grid_cols: int = 2
    row_variance_threshold: float = 1e-4
    row_normalizer: str = "height"
    eps_frac: float = 0.05
    min_pts: int = 3
    multichoice_min_count: int = 4
    threshold_question_ratio: float = 2.0
    depth_percentile: float = 0.10
    rank_k: int = 3
    depth_rank_k: int = 3
    option_pool_cap: int = 256

    def __post_init__(self) -> None:
        for name in (
            "count_margin_ratio",
            "area_margin_ratio",
            "rank_gap_ratio",
            "depth_margin_ratio",
            "aspect_ratio_threshold",
            "threshold_question_ratio",
        ):
            if not getattr(self, name) > 1.0:
                raise ValueError(f"{name} must be > 1, got {getattr(self, name)}")
        for name in (
            "buffer_frac",
            "grid_margin_frac",
            "eps_frac",
            "depth_percentile",
            "vertical_overlap_min",
        ):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {getattr(self, name)}")
        if self.buffer_frac >= 1.0 / 6.0:
            raise ValueError("buffer_frac must be < 1/6")
        if self.eps_frac <= 0:
            raise ValueError("eps_frac must be > 0")
        if self.separation_margin_px < 0:
            raise ValueError("separation_margin_px must be >= 0")
        if self.row_variance_threshold <= 0:
            raise ValueError("row_variance_threshold must be > 0")
        if self.row_normalizer not in ROW_NORMALIZERS:
            raise ValueError(f"row_normalizer must be one of {ROW_NORMALIZERS}")
        if self.min_pts < 2:
            raise ValueError("min_pts must be >= 2")
        if self.multichoice_min_count < 2:
            raise ValueError("multichoice_min_count must be >= 2")
        if self.rank_k < 2 or self.depth_rank_k < 2:
            raise ValueError("ranking k must be >= 2")
        if self.option_pool_cap < 3:
            raise ValueError("option_pool_cap must be >= 3")
        GridSpec(self.grid_rows, self.grid_cols)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.grid_rows, self.grid_cols)

    def replace(self, **changes: Any) -> "TemplateConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, Any], base: "TemplateConfig" = None) -> "TemplateConfig":
        """Build from string or typed values, coercing to each field's type."""
        base = base or cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        changes: Dict[str, Any] = {}
        for key, raw in values.items():
            if key not in types:
                raise KeyError(f"unknown template setting {key!r}")
            changes[key] = _coerce(types[key], raw)
        return dataclasses.replace(base, **changes)


def _coerce(type_name: str, raw: Any) -> Any:
    if type_name == "bool":
        if isinstance(raw, bool):
            return raw
        text = str(raw).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if type_name == "int":
        return int(raw)
    if type_name == "float":
        return float(raw)
    return str(raw)
