"""TOML configuration schema.

Unknown keys are rejected everywhere so typos fail loudly before any work
starts. Example::

    log_level = "INFO"

    [job]
    mode = "anomaly-test"
    input_dir = "cityscapes_test"
    output_dir = "cs_poc"
    catalogs = ["poc-alt-25", "cityscapes-id-6"]

    [job.placement]
    min_frac = 0.05
    max_frac = 0.35

    [backends]
    url = "http://gpu-box:8000"
"""
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import catalog as catalog_mod
from .blend import BlendConfig
from .generate import CatalogUse, GenerationJob, default_role, ood_finetune_catalog
from .placement import PlacementConfig
from .types import CLASS_ROLES

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PlacementSection(_Strict):
    min_frac: float = Field(0.05, gt=0, le=1)
    max_frac: float = Field(0.35, gt=0, le=1)
    max_attempts: int = Field(50, ge=1)
    overlap_threshold: float = Field(0.6, gt=0, le=1)
    placement_mode: Literal["guided", "random"] = "guided"
    crop_multiple: int = Field(64, ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.min_frac > self.max_frac:
            raise ValueError("min_frac must not exceed max_frac")
        return self


class BlendSection(_Strict):
    sigma: float = Field(5.0, gt=0)
    truncate: float = Field(3.0, ge=1)
    min_object_area: float = Field(0.01, ge=0, lt=1)


class JobSection(_Strict):
    mode: Literal["anomaly-test", "ood-finetune", "extend"] = "anomaly-test"
    input_dir: Path
    output_dir: Path
    catalogs: List[str] = Field(default_factory=list)
    augmentations_per_image: int = Field(3, ge=1)
    global_seed: int = Field(0, ge=0, lt=2**64)
    concurrency: int = Field(4, ge=1)
    compose: bool = False
    id_object_fraction: float = Field(1 / 6, ge=0, le=1)
    base_ignore_id: int = Field(255, ge=0, le=255)
    overwrite: bool = False
    resume: bool = False
    placement: PlacementSection = Field(default_factory=PlacementSection)
    blend: BlendSection = Field(default_factory=BlendSection)

    @field_validator("input_dir")
    @classmethod
    def _input_exists(cls, v: Path) -> Path:
        if not v.is_dir():
            raise ValueError(f"directory {v} does not exist")
        return v

    @field_validator("catalogs")
    @classmethod
    def _known_catalogs(cls, v: List[str]) -> List[str]:
        for item in v:
            name, _, role = item.partition(":")
            if name not in catalog_mod.catalog_names():
                raise ValueError(f"unknown catalog {name!r}")
            if role and role not in CLASS_ROLES:
                raise ValueError(f"unknown class role {role!r} in {item!r}")
        return v


class BackendSection(_Strict):
    mock: bool = False
    mock_miss: bool = False
    url: Optional[str] = None
    timeout: float = Field(120.0, gt=0)
    retries: int = Field(3, ge=1)
    backoff: float = Field(0.5, ge=0)
    concurrency: int = Field(4, ge=1)
    steps: int = Field(50, ge=1)
    guidance: float = 7.5
    detection_threshold: float = Field(0.3, gt=0, le=1)


class EvalSection(_Strict):
    scores_dir: Optional[Path] = None
    labels_dir: Optional[Path] = None
    out_path: Optional[Path] = None
    n_bins: int = Field(0, ge=0)


class AppConfig(_Strict):
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    job: Optional[JobSection] = None
    backends: BackendSection = Field(default_factory=BackendSection)
    eval: EvalSection = Field(default_factory=EvalSection)


def read_config(path: Optional[Path]) -> Dict[str, Any]:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def set_path(raw: Dict[str, Any], dotted: str, value: Any) -> None:
    node = raw
    *parents, last = dotted.split(".")
    for key in parents:
        node = node.setdefault(key, {})
    node[last] = value


def format_errors(exc: ValidationError) -> List[str]:
    return [f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in exc.errors()]


def resolve_catalogs(items: List[str], mode: str) -> List[CatalogUse]:
    uses = []
    for item in items:
        name, _, role = item.partition(":")
        role = role or default_role(name, mode)
        cat = ood_finetune_catalog() if (name == "coco-80" and mode == "ood-finetune") else catalog_mod.load_catalog(name)
        uses.append(CatalogUse(cat, role))
    return uses


def build_job(cfg: AppConfig) -> GenerationJob:
    j, b = cfg.job, cfg.backends
    return GenerationJob(
        mode=j.mode,
        input_dir=j.input_dir,
        output_dir=j.output_dir,
        catalogs=tuple(resolve_catalogs(j.catalogs, j.mode)),
        augmentations_per_image=j.augmentations_per_image,
        global_seed=j.global_seed,
        placement=PlacementConfig(**j.placement.model_dump()),
        blend=BlendConfig(**j.blend.model_dump()),
        concurrency=j.concurrency,
        compose=j.compose,
        id_object_fraction=j.id_object_fraction,
        steps=b.steps,
        guidance=b.guidance,
        detection_threshold=b.detection_threshold,
        base_ignore_id=j.base_ignore_id,
        overwrite=j.overwrite,
        resume=j.resume,
    )
