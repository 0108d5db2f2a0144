"""Deterministic test images: fBm texture plus structure, and a structured scene."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GrayImage, make_rng
from .fbm import FbmParams, field_to_unit, synth_field

STRUCTURES = ("step", "disk", "checker")


@dataclass(frozen=True, eq=False)
class Composite:
    """``image = texture + structure`` with both ground-truth layers kept."""

    image: GrayImage
    texture: GrayImage
    structure: GrayImage


def structure_overlay(kind: str, side: int, amplitude: float) -> np.ndarray:
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64)
    c = (side - 1) / 2.0
    if kind == "step":
        # half-plane edge tilted by ~14 degrees
        mask = (xx - c) - 0.25 * (yy - c) > 0
    elif kind == "disk":
        mask = np.hypot(xx - c, yy - c) <= side / 4.0
    elif kind == "checker":
        cell = max(side // 8, 1)
        mask = ((xx // cell + yy // cell) % 2) == 1
    else:
        raise ValueError(f"unknown structure {kind!r}; choose from {STRUCTURES}")
    return amplitude * mask.astype(np.float64)


def make_composite(hurst: float, side: int, structure: str = "step",
                   amplitude: float = 1.0, seed: int = 0, sigma_w2: float = 1.0) -> Composite:
    """fBm field mapped to [0, 1] plus a piecewise-constant overlay."""
    texture = field_to_unit(synth_field(FbmParams(hurst, sigma_w2), side, seed))
    overlay = structure_overlay(structure, side, amplitude)
    return Composite(GrayImage(texture.data + overlay), texture, GrayImage(overlay))


def make_scene(side: int = 128, noise: float = 0.01, seed: int = 0) -> GrayImage:
    """Edge-dominated stand-in for a photograph, with no stochastic texture.

    A shaded background, disks, rectangles and thin lines, plus white sensor
    noise of standard deviation ``noise``, stored at 8-bit precision in [0, 1].
    """
    yy, xx = np.mgrid[0:side, 0:side].astype(np.float64) / side
    u = 0.55 + 0.25 * yy - 0.1 * xx + 0.08 * np.sin(5.0 * xx + 2.0 * yy) * np.cos(3.0 * yy)
    shapes = [
        (np.hypot(xx - 0.35, yy - 0.3) < 0.18, 0.15),
        (np.hypot(xx - 0.7, yy - 0.65) < 0.22, 0.9),
        ((np.abs(xx - 0.25) < 0.12) & (np.abs(yy - 0.72) < 0.2), 0.3),
        ((np.abs(xx - 0.8) < 0.08) & (np.abs(yy - 0.2) < 0.15), 0.05),
    ]
    for mask, value in shapes:
        u = np.where(mask, value + 0.1 * xx * yy + 0.05 * np.cos(4.0 * xx), u)
    lines = (np.abs(yy - 0.5 - 0.3 * (xx - 0.5)) < 1.0 / side) | (np.abs(xx - 0.55) < 0.6 / side)
    u = np.where(lines, 0.02, u)
    if noise > 0:
        u = u + noise * make_rng(seed).standard_normal(u.shape)
    return GrayImage(np.rint(np.clip(u, 0.0, 1.0) * 255.0) / 255.0)
