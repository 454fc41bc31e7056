"""White-reference image synthesis and the illuminant bank.

No real white-tile acquisitions ship with this package, so the "measured"
role is filled by synthetic surrogates: separable donor fields (a smooth
center-bright vignette times a broadband base spectrum) supply the spatial
variation that a real acquisition would, and LED-like base spectra (sums
of a few Gaussian peaks) supply narrow-band structure.  Halogen-style
illuminants are produced by grafting a sampled parametric spectrum onto a
donor's spatial variation; LED-style variety comes from linear inter- and
extrapolation between base images of distinct clusters.

Bank items are quantized to single precision at generation time so that
in-memory banks are bit-identical to their serialized form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (
    EPS_WHITE,
    F32_WHITE_FLOOR,
    HsiCube,
    Spectrum,
    WavelengthGrid,
    WhiteRefImage,
    default_desk_grid,
    l1_normalize,
    mean_spectrum,
    quantize_single,
)
from .errors import DimensionError, DomainError, ParameterError, SamplingError
from .halogen import ParamRanges, default_param_ranges, eval_halogen, sample_halogen
from .hsio import read_cube, write_cube

__all__ = [
    "PROVENANCE_MEASURED",
    "PROVENANCE_HALOGEN",
    "PROVENANCE_LED_MIX",
    "BankItem",
    "IlluminantBank",
    "BankConfig",
    "transfer_spatial",
    "mix_illuminants",
    "cluster_illuminants",
    "make_donor",
    "generate_bank",
    "save_bank",
    "load_bank",
]

PROVENANCE_MEASURED = "measured-surrogate"
PROVENANCE_HALOGEN = "simulated-halogen"
PROVENANCE_LED_MIX = "simulated-led-mix"
_PROVENANCES = frozenset({PROVENANCE_MEASURED, PROVENANCE_HALOGEN, PROVENANCE_LED_MIX})


@dataclass(frozen=True, eq=False)
class BankItem:
    """One white-reference image with provenance and generation metadata."""

    white: WhiteRefImage
    provenance: str
    item_id: int
    cluster_id: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.provenance not in _PROVENANCES:
            raise ParameterError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True, eq=False)
class IlluminantBank:
    """An ordered collection of white references sharing grid and shape."""

    items: tuple[BankItem, ...]

    def __post_init__(self):
        items = tuple(self.items)
        if not items:
            raise ParameterError("illuminant bank must not be empty")
        first = items[0].white
        for item in items[1:]:
            if item.white.shape != first.shape:
                raise DimensionError("bank items must share one (H, W, B) shape")
            if not item.white.grid.matches(first.grid):
                raise DimensionError("bank items must share one wavelength grid")
        object.__setattr__(self, "items", items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    @property
    def grid(self) -> WavelengthGrid:
        return self.items[0].white.grid

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.items[0].white.shape

    def item_ids(self) -> list[int]:
        return [item.item_id for item in self.items]

    def subset(self, ids) -> "IlluminantBank":
        wanted = set(ids)
        return IlluminantBank(
            tuple(item for item in self.items if item.item_id in wanted)
        )


def transfer_spatial(f: Spectrum, donor: WhiteRefImage) -> WhiteRefImage:
    """Graft a target spectrum onto a donor's spatial variation.

    out(i, j, k) = f(k) * donor(i, j, k) / mean_spectrum(donor)(k)

    The output has ``f`` as its mean spectrum (to within rounding) and the
    donor's relative spatial structure.
    """
    if not f.grid.matches(donor.grid):
        raise DimensionError("spectrum and donor wavelength grids differ")
    ibar = mean_spectrum(donor.cube).values
    if np.any(ibar <= 0.0):
        raise DomainError("donor mean spectrum must be strictly positive")
    out = donor.values * (f.values / ibar)
    return WhiteRefImage(HsiCube(out, donor.grid))


def mix_illuminants(w1: WhiteRefImage, w2: WhiteRefImage, alpha: float) -> WhiteRefImage:
    """Linear inter-/extrapolation of two white references.

    out = alpha * w1 + (1 - alpha) * w2, floored at EPS_WHITE so that
    extrapolated values stay physically admissible.  alpha outside [0, 1]
    is allowed; the endpoints alpha in {0, 1} reproduce the inputs exactly
    because the floor can only raise values that are already below it.
    """
    if w1.shape != w2.shape:
        raise DimensionError(f"white shapes differ: {w1.shape} vs {w2.shape}")
    if not w1.grid.matches(w2.grid):
        raise DimensionError("white wavelength grids differ")
    if not np.isfinite(alpha):
        raise ParameterError("alpha must be finite")
    out = alpha * w1.values + (1.0 - alpha) * w2.values
    out = np.maximum(out, EPS_WHITE)
    return WhiteRefImage(HsiCube(out, w1.grid))


def _kmeans(features: np.ndarray, k: int, rng: np.random.Generator, max_iter: int = 100):
    """Lloyd's algorithm with k-means++ seeding.

    Deterministic under a fixed generator state; the returned labels always
    assign every point to its nearest centroid (ties to the lowest id).
    """
    n = features.shape[0]
    centroids = np.empty((k, features.shape[1]), dtype=np.float64)
    centroids[0] = features[rng.integers(n)]
    d2 = np.sum((features - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            centroids[i] = features[rng.integers(n)]
        else:
            centroids[i] = features[rng.choice(n, p=d2 / total)]
        d2 = np.minimum(d2, np.sum((features - centroids[i]) ** 2, axis=1))

    labels = None
    for _ in range(max_iter):
        dist = np.sum((features[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(dist, axis=1)
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for i in range(k):
            members = features[labels == i]
            if len(members):
                centroids[i] = members.mean(axis=0)
            else:
                # Re-seed an empty cluster with the point farthest from its
                # current centroid (first such point; deterministic).
                far = int(np.argmax(np.min(dist, axis=1)))
                centroids[i] = features[far]
    dist = np.sum((features[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
    labels = np.argmin(dist, axis=1)
    return labels, centroids


def cluster_illuminants(
    bank: IlluminantBank, k: int, rng: np.random.Generator
) -> IlluminantBank:
    """Assign k-means cluster ids based on L1-normalized mean spectra."""
    if k < 2:
        raise ParameterError("k must be >= 2")
    if k > len(bank):
        raise ParameterError(f"k={k} exceeds bank size {len(bank)}")
    features = np.stack(
        [l1_normalize(mean_spectrum(item.white.cube)).values for item in bank]
    )
    labels, _ = _kmeans(features, k, rng)
    items = tuple(
        BankItem(
            white=item.white,
            provenance=item.provenance,
            item_id=item.item_id,
            cluster_id=int(label),
            params=item.params,
        )
        for item, label in zip(bank.items, labels)
    )
    return IlluminantBank(items)


@dataclass(frozen=True)
class BankConfig:
    """Settings for synthetic illuminant bank generation."""

    grid: WavelengthGrid = field(default_factory=default_desk_grid)
    height: int = 32
    width: int = 32
    n_halogen: int = 120
    n_mix: int = 80
    stray_levels: tuple[float, ...] = (0.0, 0.35, 0.7, 1.0)
    ranges: ParamRanges = field(default_factory=default_param_ranges)
    alpha_lo: float = -0.5
    alpha_hi: float = 1.5
    n_led_bases: int = 24
    cluster_k: int = 4
    # Donor vignette: center-bright low-order polynomial fall-off.
    falloff_lo: float = 0.10
    falloff_hi: float = 0.40
    center_jitter: float = 0.25
    # Smallest admissible band value of a sampled halogen spectrum after
    # normalization; draws below this are rejected so the transferred
    # white reference stays comfortably positive.
    min_band: float = 1e-3

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ParameterError("bank image dimensions must be positive")
        if self.n_halogen < 0 or self.n_mix < 0 or self.n_halogen + self.n_mix < 1:
            raise ParameterError("bank must contain at least one item")
        if not self.stray_levels:
            raise ParameterError("stray_levels must not be empty")
        if not all(0.0 <= s <= 1.0 for s in self.stray_levels):
            raise ParameterError("stray levels must lie in [0, 1]")
        if self.alpha_lo > self.alpha_hi:
            raise ParameterError("alpha range is inverted")
        if self.n_mix > 0 and self.n_led_bases < max(self.cluster_k, 2):
            raise ParameterError("need at least cluster_k LED bases for mixing")
        if not 0.0 <= self.falloff_lo <= self.falloff_hi < 1.0:
            raise ParameterError("vignette fall-off must satisfy 0 <= lo <= hi < 1")


def _vignette(
    height: int, width: int, falloff: float, center: tuple[float, float]
) -> np.ndarray:
    """Quadratic center-bright field in [1 - falloff, 1]."""
    ii = np.arange(height, dtype=np.float64)[:, None]
    jj = np.arange(width, dtype=np.float64)[None, :]
    r2 = ((ii - center[0]) / max(height, 1)) ** 2 + (
        (jj - center[1]) / max(width, 1)
    ) ** 2
    peak = float(r2.max())
    if peak <= 0.0:
        return np.ones((height, width))
    return 1.0 - falloff * (r2 / peak)


def _sample_vignette(cfg: BankConfig, rng: np.random.Generator) -> np.ndarray:
    falloff = rng.uniform(cfg.falloff_lo, cfg.falloff_hi)
    ci = (cfg.height - 1) / 2.0 + rng.uniform(-1.0, 1.0) * cfg.center_jitter * cfg.height
    cj = (cfg.width - 1) / 2.0 + rng.uniform(-1.0, 1.0) * cfg.center_jitter * cfg.width
    return _vignette(cfg.height, cfg.width, falloff, (ci, cj))


def _broadband_spectrum(grid: WavelengthGrid, rng: np.random.Generator) -> np.ndarray:
    """Smooth positive base spectrum with unit mean (quadratic in lambda)."""
    lam = grid.lambdas
    x = (lam - lam[0]) / (lam[-1] - lam[0])
    c1 = rng.uniform(-0.5, 0.5)
    c2 = rng.uniform(-0.4, 0.4)
    s = 1.0 + c1 * (x - 0.5) + c2 * (x - 0.5) ** 2
    s = np.maximum(s, 0.05)
    return s / s.mean()


def _led_spectrum(grid: WavelengthGrid, rng: np.random.Generator) -> np.ndarray:
    """LED-like base spectrum: 2-3 Gaussian peaks on a small pedestal."""
    lam = grid.lambdas
    span = lam[-1] - lam[0]
    s = np.full(lam.shape, 0.08, dtype=np.float64)
    for _ in range(int(rng.integers(2, 4))):
        amp = rng.uniform(0.5, 1.2)
        center = rng.uniform(lam[0], lam[-1])
        sigma = rng.uniform(0.04, 0.12) * span
        s = s + amp * np.exp(-((lam - center) ** 2) / (2.0 * sigma**2))
    return s / s.mean()


def make_donor(cfg: BankConfig, rng: np.random.Generator) -> WhiteRefImage:
    """Synthetic measured-surrogate donor: vignette times broadband spectrum."""
    vig = _sample_vignette(cfg, rng)
    spec = _broadband_spectrum(cfg.grid, rng)
    return WhiteRefImage(HsiCube(vig[:, :, None] * spec[None, None, :], cfg.grid))


def _as_stored_white(values: np.ndarray, grid: WavelengthGrid) -> WhiteRefImage:
    """Quantize to the file payload precision, keeping the white floor valid."""
    q = quantize_single(values)
    return WhiteRefImage(HsiCube(np.maximum(q, F32_WHITE_FLOOR), grid))


def _normalize_halogen(p, spectrum: np.ndarray):
    """Scale a halogen spectrum to unit mean, staying inside the model family.

    Scaling (a, b) by t scales the spectrum by t^3 exactly, so the
    normalized spectrum still corresponds to explicit model parameters.
    """
    from .halogen import HalogenParams

    m = float(spectrum.mean())
    t = (1.0 / m) ** (1.0 / 3.0)
    return HalogenParams(p.a * t, p.b * t, p.c, p.d), spectrum / m


def generate_bank(cfg: BankConfig, rng: np.random.Generator) -> IlluminantBank:
    """Generate ``n_halogen`` transferred halogen items plus ``n_mix`` LED mixes.

    LED-like base images are generated internally, clustered, and mixed
    pairwise across distinct clusters; the bases themselves are not part
    of the returned bank.  Deterministic under the generator's seed.
    """
    grid = cfg.grid
    items: list[BankItem] = []

    bases: IlluminantBank | None = None
    if cfg.n_mix > 0:
        base_items = []
        for i in range(cfg.n_led_bases):
            vig = _sample_vignette(cfg, rng)
            spec = _led_spectrum(grid, rng)
            white = _as_stored_white(vig[:, :, None] * spec[None, None, :], grid)
            base_items.append(
                BankItem(white=white, provenance=PROVENANCE_MEASURED, item_id=i)
            )
        bases = cluster_illuminants(IlluminantBank(tuple(base_items)), cfg.cluster_k, rng)

    for i in range(cfg.n_halogen):
        stray = float(cfg.stray_levels[i % len(cfg.stray_levels)])
        params = None
        fvals = None
        for _ in range(200):
            cand = sample_halogen(cfg.ranges, stray, rng, grid)
            cand_vals = eval_halogen(cand, grid).values
            cand, cand_vals = _normalize_halogen(cand, cand_vals)
            if float(cand_vals.min()) >= cfg.min_band:
                params, fvals = cand, cand_vals
                break
        if params is None:
            raise SamplingError(
                f"no halogen draw with min band >= {cfg.min_band:g} in 200 tries"
            )
        donor = make_donor(cfg, rng)
        white = transfer_spatial(Spectrum(fvals, grid), donor)
        items.append(
            BankItem(
                white=_as_stored_white(white.values, grid),
                provenance=PROVENANCE_HALOGEN,
                item_id=i,
                params={
                    "a": params.a,
                    "b": params.b,
                    "c": params.c,
                    "d": params.d,
                    "stray_level": stray,
                    "scenario": f"halogen-{stray:g}",
                },
            )
        )

    for j in range(cfg.n_mix):
        clusters = sorted({item.cluster_id for item in bases})
        ca, cb = rng.choice(len(clusters), size=2, replace=False)
        ca, cb = clusters[int(ca)], clusters[int(cb)]
        pool_a = [it for it in bases if it.cluster_id == ca]
        pool_b = [it for it in bases if it.cluster_id == cb]
        wa = pool_a[int(rng.integers(len(pool_a)))]
        wb = pool_b[int(rng.integers(len(pool_b)))]
        alpha = float(rng.uniform(cfg.alpha_lo, cfg.alpha_hi))
        mixed = mix_illuminants(wa.white, wb.white, alpha)
        items.append(
            BankItem(
                white=_as_stored_white(mixed.values, grid),
                provenance=PROVENANCE_LED_MIX,
                item_id=cfg.n_halogen + j,
                params={
                    "alpha": alpha,
                    "base_a": wa.item_id,
                    "base_b": wb.item_id,
                    "scenario": "led-mix",
                },
            )
        )

    return IlluminantBank(tuple(items))


def save_bank(bank: IlluminantBank, directory: str | Path) -> None:
    """Write bank items as HSIC files plus a ``bank.json`` index."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    index = []
    for item in bank:
        name = f"illum_{item.item_id:04d}.hsic"
        write_cube(item.white.cube, directory / name)
        index.append(
            {
                "file": name,
                "item_id": item.item_id,
                "provenance": item.provenance,
                "cluster_id": item.cluster_id,
                "params": item.params,
            }
        )
    doc = {"format": "spectracal-bank", "version": 1, "items": index}
    (directory / "bank.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_bank(directory: str | Path) -> IlluminantBank:
    directory = Path(directory)
    doc = json.loads((directory / "bank.json").read_text())
    if doc.get("format") != "spectracal-bank" or doc.get("version") != 1:
        raise ParameterError(f"{directory}: not a spectracal bank directory")
    items = []
    for entry in doc["items"]:
        white = WhiteRefImage(read_cube(directory / entry["file"]))
        cluster = entry.get("cluster_id")
        items.append(
            BankItem(
                white=white,
                provenance=entry["provenance"],
                item_id=int(entry["item_id"]),
                cluster_id=None if cluster is None else int(cluster),
                params=entry.get("params", {}),
            )
        )
    return IlluminantBank(tuple(items))
