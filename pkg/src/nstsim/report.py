"""End-to-end analysis pipeline and directory batch mode.

``run_report`` separates the input, runs the measures on the texture layer
(raw-image Gaussianity and GLCM-MI are added for comparison) and returns a
JSON-serializable document with a fixed key order.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .core import DegenerateInputError, GrayImage, load_image
from .diffusion import DiffusionSettings, separate
from .glcm import diagonal_offsets, glcm_mi_profile, horizontal_offsets
from .mi import HistogramSpec, mi_patches, mi_scales
from .stats import haar_detail, ks_test_gaussian, ks_test_uniform_phase, kurtosis, texture_is_degenerate

DEGENERATE = "degenerate texture layer"
IMAGE_SUFFIXES = (".pgm", ".pnm", ".png", ".txf")
WORKERS_ENV = "NSTSIM_WORKERS"


@dataclass(frozen=True)
class ReportConfig:
    """Every tunable of the pipeline.  Field names double as config-file keys."""

    iterations: int = 50
    kappa: float | None = None
    dt: float = 0.2
    conductance: str = "exponential"
    alpha: float = 0.05
    lilliefors: bool = False
    bins: int = 256
    scale_levels: int = 4
    patch: int = 32
    patch_levels: int = 3
    glcm_levels: int = 32
    sweep: str = "diagonal"
    d_max: int = 30

    def __post_init__(self):
        self.diffusion()
        HistogramSpec(self.bins)
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.sweep not in ("horizontal", "diagonal"):
            raise ValueError("sweep must be 'horizontal' or 'diagonal'")
        for name in ("scale_levels", "patch_levels", "glcm_levels", "d_max", "patch"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def keys(cls) -> tuple:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ReportConfig":
        unknown = set(mapping) - set(cls.keys())
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**mapping)

    @classmethod
    def load(cls, path) -> "ReportConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        return cls.from_mapping(data)

    def override(self, **values) -> "ReportConfig":
        """Apply the non-None entries of ``values`` on top of this config."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def diffusion(self) -> DiffusionSettings:
        return DiffusionSettings(self.iterations, self.kappa, self.dt, self.conductance)

    def offsets(self):
        make = diagonal_offsets if self.sweep == "diagonal" else horizontal_offsets
        return make(self.d_max)

    def as_dict(self) -> dict:
        return asdict(self)


class ReportStageError(RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"stage {stage}: {exc}")
        self.stage = stage
        self.original = exc


def _describe(source, img: GrayImage) -> dict:
    if isinstance(source, (str, os.PathLike)):
        digest = hashlib.sha256(Path(source).read_bytes()).hexdigest()
        name = str(source)
    else:
        digest = hashlib.sha256(np.ascontiguousarray(img.data, dtype="<f8").tobytes()).hexdigest()
        name = None
    return {"path": name, "width": img.width, "height": img.height, "sha256": digest}


def _gaussian_or_marker(x, config: ReportConfig):
    try:
        return ks_test_gaussian(x, config.alpha, config.lilliefors).as_dict()
    except DegenerateInputError as exc:
        return {"degenerate": str(exc)}


def _kurtosis_pair(x):
    try:
        k = kurtosis(x)
    except DegenerateInputError as exc:
        return {"degenerate": str(exc)}
    return {"plain": k, "excess": k - 3.0}


def run_report(source, config: ReportConfig | None = None) -> dict:
    """Full analysis of an image path or ``GrayImage``.

    GLCM-MI profiles are given for both the input and the texture layer;
    every other measure runs on the texture layer, plus raw-input
    Gaussianity for comparison.

    A negligible texture layer (for instance a constant input) yields
    ``{"degenerate": "degenerate texture layer"}`` in place of each
    texture-layer measure instead of an error.
    """
    config = config or ReportConfig()
    stage = "load"
    try:
        img = source if isinstance(source, GrayImage) else load_image(source)
        doc = {"input": _describe(source, img)}
        stage = "separate"
        sep = separate(img, config.diffusion())
        doc["settings"] = {
            **config.as_dict(),
            "effective_kappa": sep.settings.kappa,
            "backend": BACKEND,
            "version": __version__,
        }
        stage = "gaussianity"
        raw_detail = haar_detail(img).coefficients
        results = {"raw_gaussian": _gaussian_or_marker(raw_detail, config)}
        degenerate = texture_is_degenerate(sep.texture, img)
        marker = {"degenerate": DEGENERATE}
        if degenerate:
            results.update({
                "texture_gaussian": marker,
                "texture_phase_uniform": marker,
                "kurtosis": {"raw": _kurtosis_pair(raw_detail), "texture": marker},
                "mi_scales": marker,
                "mi_patches": marker,
            })
        else:
            tex = sep.texture
            tex_detail = haar_detail(tex).coefficients
            results["texture_gaussian"] = _gaussian_or_marker(tex_detail, config)
            stage = "phase"
            results["texture_phase_uniform"] = ks_test_uniform_phase(tex, config.alpha).as_dict()
            stage = "kurtosis"
            results["kurtosis"] = {"raw": _kurtosis_pair(raw_detail), "texture": _kurtosis_pair(tex_detail)}
            spec = HistogramSpec(config.bins)
            stage = "mi_scales"
            results["mi_scales"] = mi_scales(tex, config.scale_levels, spec).as_dict()
            stage = "mi_patches"
            results["mi_patches"] = mi_patches(tex, config.patch, config.patch_levels, spec).as_dict()
        stage = "glcm_mi"
        results["glcm_mi"] = {
            "input": glcm_mi_profile(img, config.glcm_levels, config.offsets()).as_dict(),
            "texture": marker if degenerate else
            glcm_mi_profile(sep.texture, config.glcm_levels, config.offsets()).as_dict(),
        }
        results["degenerate_texture"] = degenerate
        doc["results"] = results
    except ReportStageError:
        raise
    except Exception as exc:
        raise ReportStageError(stage, exc) from exc
    return _finite(doc)


def _finite(obj):
    """Replace non-finite floats with None so the document is strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_finite(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


# --- batch ------------------------------------------------------------------

def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        value = int(raw)
        if value < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return value
    return max(1, min(4, os.cpu_count() or 1))


def list_images(directory) -> list:
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"not a directory: {directory}")
    return sorted(p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)


def _batch_item(args) -> dict:
    path, config = args
    try:
        return run_report(path, config)
    except ReportStageError as exc:
        return {"input": {"path": str(path)},
                "error": {"stage": exc.stage, "type": type(exc.original).__name__, "message": str(exc.original)}}


def _rate(flags) -> dict:
    flags = list(flags)
    passed = sum(flags)
    return {"passed": passed, "tested": len(flags),
            "percent": 100.0 * passed / len(flags) if flags else None}


def aggregate(reports: list) -> dict:
    """Gaussianity and phase-uniformity pass rates across reports."""
    ok = [r for r in reports if "results" in r]

    def accepted(key):
        return [r["results"][key]["accepted"] for r in ok if "accepted" in r["results"][key]]

    return {
        "images": len(reports),
        "failed": len(reports) - len(ok),
        "degenerate_texture": sum(r["results"]["degenerate_texture"] for r in ok),
        "gaussian_pass_rate": {
            "entire_image": _rate(accepted("raw_gaussian")),
            "texture_layer": _rate(accepted("texture_gaussian")),
        },
        "phase_uniform_pass_rate": _rate(accepted("texture_phase_uniform")),
    }


def run_batch(directory, config: ReportConfig | None = None, workers: int | None = None) -> dict:
    """Report every image in ``directory`` with at most ``workers`` processes.

    Per-image failures are recorded in that image's entry and do not stop
    the batch.  Output order follows sorted file names.
    """
    config = config or ReportConfig()
    paths = list_images(directory)
    workers = default_workers() if workers is None else workers
    if workers < 1:
        raise ValueError("workers must be >= 1")
    jobs = [(p, config) for p in paths]
    if workers == 1 or len(jobs) <= 1:
        reports = [_batch_item(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            reports = list(pool.map(_batch_item, jobs))
    return {
        "directory": str(directory),
        "settings": {**config.as_dict(), "workers": workers},
        "aggregate": aggregate(reports),
        "reports": reports,
    }
