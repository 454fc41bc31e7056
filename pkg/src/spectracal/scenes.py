"""Synthetic desk-scale scene generation.

Reflectance follows a Beer-Lambert-style forward model over three fixed
absorption templates (oxygenated hemoglobin, deoxygenated hemoglobin,
water proxies):

    R(lam) = exp(-(c_oxy * mu_oxy(lam) + c_deoxy * mu_deoxy(lam)
                   + c_water * mu_water(lam)) * d) + s_base

Scenes are piecewise-constant label regions (a Voronoi partition of random
sites) with smooth per-chromophore concentration fields on top, so that
every pixel carries ground-truth concentrations and an oxygenation
fraction c_oxy / (c_oxy + c_deoxy).

The absorption templates are fixed Gaussian-bump curves; the packaged CSV
asset tabulates them on the full-scale grid and documents the exact
formula in its header so the table can be regenerated bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .core import (
    HsiCube,
    WavelengthGrid,
    default_desk_grid,
    default_full_grid,
    quantize_single,
)
from .errors import DimensionError, FormatError, ParameterError, SamplingError
from .hsio import read_cube, write_cube

__all__ = [
    "CHROMOPHORES",
    "chromophore_basis",
    "chromophore_csv_text",
    "load_chromophore_csv",
    "packaged_chromophore_path",
    "SceneConfig",
    "SceneTruth",
    "synth_scene",
    "save_scene",
    "load_scene",
    "save_scenes",
    "load_scenes",
]

CHROMOPHORES = ("oxy", "deoxy", "water")

# Template definition: mu(lam) = base + sum_i A_i * exp(-(lam - m_i)^2 / (2 s_i^2)),
# lam in nanometers, accumulated left to right in double precision.
_MU_BASE = {"oxy": 0.08, "deoxy": 0.08, "water": 0.04}
_MU_BUMPS = {
    "oxy": ((1.0, 542.0, 18.0), (0.9, 577.0, 15.0), (0.35, 900.0, 60.0)),
    "deoxy": ((1.1, 556.0, 22.0), (0.45, 760.0, 30.0), (0.15, 910.0, 70.0)),
    "water": ((0.08, 740.0, 35.0), (0.5, 970.0, 45.0)),
}


def _mu_curve(name: str, lambdas: np.ndarray) -> np.ndarray:
    mu = np.full(lambdas.shape, _MU_BASE[name], dtype=np.float64)
    for amp, center, sigma in _MU_BUMPS[name]:
        mu = mu + amp * np.exp(-((lambdas - center) ** 2) / (2.0 * sigma**2))
    return mu


def chromophore_basis(grid: WavelengthGrid) -> np.ndarray:
    """Absorption templates evaluated on ``grid``; shape (B, 3), column order
    (oxy, deoxy, water)."""
    return np.stack([_mu_curve(name, grid.lambdas) for name in CHROMOPHORES], axis=1)


def chromophore_csv_text(grid: WavelengthGrid | None = None) -> str:
    """Render the chromophore table as CSV with a self-describing header."""
    grid = grid or default_full_grid()
    lines = [
        "# spectracal chromophore absorption templates",
        "# mu(lambda) = base + sum_i A_i * exp(-(lambda - m_i)^2 / (2 * s_i^2)),",
        "# lambda in nanometers, terms accumulated left to right in IEEE-754",
        "# double precision; values printed with repr() (shortest round-trip).",
    ]
    for name in CHROMOPHORES:
        bumps = ", ".join(
            f"(A={a!r}, m={m!r}, s={s!r})" for a, m, s in _MU_BUMPS[name]
        )
        lines.append(f"# mu_{name}: base={_MU_BASE[name]!r}; bumps: {bumps}")
    lines.append("wavelength_nm,mu_oxy,mu_deoxy,mu_water")
    basis = chromophore_basis(grid)
    for lam, row in zip(grid.lambdas, basis):
        lines.append(f"{lam!r},{row[0]!r},{row[1]!r},{row[2]!r}")
    return "\n".join(lines) + "\n"


def load_chromophore_csv(path: str | Path) -> tuple[WavelengthGrid, np.ndarray]:
    """Parse a chromophore CSV into (grid, basis matrix of shape (B, 3))."""
    rows = []
    header_seen = False
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line.strip() != "wavelength_nm,mu_oxy,mu_deoxy,mu_water":
                raise FormatError(f"{path}: unexpected column header {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise FormatError(f"{path}: malformed row {line!r}")
        rows.append([float(p) for p in parts])
    if not header_seen or not rows:
        raise FormatError(f"{path}: no chromophore rows found")
    arr = np.array(rows, dtype=np.float64)
    return WavelengthGrid(arr[:, 0]), arr[:, 1:]


def packaged_chromophore_path() -> Path:
    """Path of the CSV asset shipped with the package."""
    return Path(resources.files("spectracal").joinpath("assets/chromophores.csv"))


@dataclass(frozen=True)
class SceneConfig:
    """Settings for synthetic scene generation."""

    grid: WavelengthGrid = field(default_factory=default_desk_grid)
    height: int = 32
    width: int = 32
    classes: int = 4
    thickness: float = 1.0
    s_base: float = 0.02
    hemoglobin_range: tuple[float, float] = (0.4, 1.6)
    oxygenation_range: tuple[float, float] = (0.05, 0.95)
    water_range: tuple[float, float] = (0.2, 1.0)
    # Smooth multiplicative modulation of the per-class concentrations.
    modulation_amp: float = 0.15
    concentration_floor: float = 0.02

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ParameterError("scene dimensions must be positive")
        if self.classes < 2:
            raise ParameterError("scene needs at least 2 classes")
        if self.thickness <= 0.0:
            raise ParameterError("thickness must be positive")
        if self.s_base < 0.0:
            raise ParameterError("s_base must be nonnegative")
        for name in ("hemoglobin_range", "oxygenation_range", "water_range"):
            lo, hi = getattr(self, name)
            if not 0.0 <= lo <= hi:
                raise ParameterError(f"{name} must satisfy 0 <= lo <= hi")
        if not 0.0 <= self.modulation_amp < 1.0:
            raise ParameterError("modulation_amp must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class SceneTruth:
    """A calibrated scene cube with per-pixel ground truth."""

    cube: HsiCube
    labels: np.ndarray  # (H, W) int32 in [0, classes)
    concentrations: np.ndarray  # (H, W, 3), order (oxy, deoxy, water)
    oxygenation: np.ndarray  # (H, W) in [0, 1]
    scene_id: int = 0

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int32)
        conc = np.asarray(self.concentrations, dtype=np.float64)
        oxy = np.asarray(self.oxygenation, dtype=np.float64)
        h, w, _ = self.cube.shape
        if labels.shape != (h, w):
            raise DimensionError("labels shape must match the cube")
        if conc.shape != (h, w, len(CHROMOPHORES)):
            raise DimensionError("concentration maps must be (H, W, 3)")
        if oxy.shape != (h, w):
            raise DimensionError("oxygenation map shape must match the cube")
        if labels.min() < 0:
            raise ParameterError("labels must be nonnegative")
        if np.any(conc < 0.0):
            raise ParameterError("concentrations must be nonnegative")
        if np.any((oxy < 0.0) | (oxy > 1.0)):
            raise ParameterError("oxygenation must lie in [0, 1]")
        for arr in (labels, conc, oxy):
            arr.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "concentrations", conc)
        object.__setattr__(self, "oxygenation", oxy)

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1


def _voronoi_labels(
    height: int, width: int, classes: int, rng: np.random.Generator, max_tries: int = 100
) -> np.ndarray:
    """Voronoi partition of random sites; every class owns at least one pixel."""
    ii = np.arange(height, dtype=np.float64)[:, None, None]
    jj = np.arange(width, dtype=np.float64)[None, :, None]
    for _ in range(max_tries):
        si = rng.uniform(0, height, size=classes)
        sj = rng.uniform(0, width, size=classes)
        d2 = (ii - si[None, None, :]) ** 2 + (jj - sj[None, None, :]) ** 2
        labels = np.argmin(d2, axis=2).astype(np.int32)
        if len(np.unique(labels)) == classes:
            return labels
    raise SamplingError(f"could not place {classes} non-empty regions")


def _smooth_field(
    shape: tuple[int, int], amp: float, rng: np.random.Generator
) -> np.ndarray:
    """Multiplicative modulation field 1 + amp*cos(...), one low frequency."""
    h, w = shape
    fi = rng.uniform(0.3, 1.5)
    fj = rng.uniform(0.3, 1.5)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    ii = np.arange(h, dtype=np.float64)[:, None] / h
    jj = np.arange(w, dtype=np.float64)[None, :] / w
    return 1.0 + amp * np.cos(2.0 * np.pi * (fi * ii + fj * jj) + phase)


def synth_scene(cfg: SceneConfig, rng: np.random.Generator, scene_id: int = 0) -> SceneTruth:
    """Generate one scene with ground truth; deterministic under the rng state.

    With the default configuration all cube values fall in (0, 1]; configs
    that drive the minimum absorbance below -ln(1 - s_base) (for example
    all-zero concentrations) exceed 1 by construction of the forward model.
    """
    labels = _voronoi_labels(cfg.height, cfg.width, cfg.classes, rng)
    t = rng.uniform(*cfg.oxygenation_range, size=cfg.classes)
    h = rng.uniform(*cfg.hemoglobin_range, size=cfg.classes)
    w = rng.uniform(*cfg.water_range, size=cfg.classes)
    base = np.stack([t * h, (1.0 - t) * h, w], axis=1)  # (classes, 3)

    conc = base[labels]  # (H, W, 3)
    fields = np.stack(
        [_smooth_field((cfg.height, cfg.width), cfg.modulation_amp, rng) for _ in CHROMOPHORES],
        axis=2,
    )
    conc = np.maximum(conc * fields, cfg.concentration_floor)

    basis = chromophore_basis(cfg.grid)  # (B, 3)
    absorbance = conc @ basis.T  # (H, W, B)
    reflectance = np.exp(-absorbance * cfg.thickness) + cfg.s_base
    cube = HsiCube(quantize_single(reflectance), cfg.grid)

    hemoglobin = conc[:, :, 0] + conc[:, :, 1]
    oxygenation = np.where(hemoglobin > 0.0, conc[:, :, 0] / np.maximum(hemoglobin, 1e-300), 0.0)
    return SceneTruth(
        cube=cube,
        labels=labels,
        concentrations=conc,
        oxygenation=oxygenation,
        scene_id=scene_id,
    )


def save_scene(scene: SceneTruth, directory: str | Path, name: str) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_cube(scene.cube, directory / f"{name}.hsic")
    np.save(directory / f"{name}.labels.npy", scene.labels)
    np.save(directory / f"{name}.conc.npy", scene.concentrations)
    np.save(directory / f"{name}.oxy.npy", scene.oxygenation)


def load_scene(directory: str | Path, name: str, scene_id: int = 0) -> SceneTruth:
    directory = Path(directory)
    return SceneTruth(
        cube=read_cube(directory / f"{name}.hsic"),
        labels=np.load(directory / f"{name}.labels.npy"),
        concentrations=np.load(directory / f"{name}.conc.npy"),
        oxygenation=np.load(directory / f"{name}.oxy.npy"),
        scene_id=scene_id,
    )


def save_scenes(scenes: list[SceneTruth], directory: str | Path) -> None:
    """Write scenes plus a ``scenes.json`` index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for scene in scenes:
        name = f"scene_{scene.scene_id:04d}"
        save_scene(scene, directory, name)
        index.append({"name": name, "scene_id": scene.scene_id})
    doc = {"format": "spectracal-scenes", "version": 1, "items": index}
    (directory / "scenes.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n"
    )


def load_scenes(directory: str | Path) -> list[SceneTruth]:
    directory = Path(directory)
    doc = json.loads((directory / "scenes.json").read_text())
    if doc.get("format") != "spectracal-scenes" or doc.get("version") != 1:
        raise ParameterError(f"{directory}: not a spectracal scene directory")
    return [
        load_scene(directory, entry["name"], scene_id=int(entry["scene_id"]))
        for entry in doc["items"]
    ]
