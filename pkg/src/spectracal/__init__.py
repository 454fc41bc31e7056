"""Desk-scale hyperspectral illumination calibration.

The package provides physics-based white-reference simulation, classical
global-illuminant baselines, a learnable per-pixel white-reference
estimator, and an evaluation harness for spectral fidelity and downstream
task degradation/recovery.

Submodules are imported lazily so that the command-line entry point can
configure thread caps before numpy is loaded.
"""

from importlib import import_module

__version__ = "0.1.0"

# name -> submodule providing it
_EXPORTS = {
    "EPS_WHITE": "core",
    "WavelengthGrid": "core",
    "Spectrum": "core",
    "HsiCube": "core",
    "WhiteRefImage": "core",
    "default_full_grid": "core",
    "default_desk_grid": "core",
    "calibrate": "core",
    "simulate_raw": "core",
    "mean_spectrum": "core",
    "l1_normalize": "core",
    "read_cube": "hsio",
    "write_cube": "hsio",
    "HalogenParams": "halogen",
    "ParamRanges": "halogen",
    "default_param_ranges": "halogen",
    "eval_halogen": "halogen",
    "fit_halogen": "halogen",
    "sample_halogen": "halogen",
    "IlluminantBank": "illum",
    "BankItem": "illum",
    "BankConfig": "illum",
    "transfer_spatial": "illum",
    "cluster_illuminants": "illum",
    "mix_illuminants": "illum",
    "generate_bank": "illum",
    "SceneConfig": "scenes",
    "SceneTruth": "scenes",
    "synth_scene": "scenes",
    "chromophore_basis": "scenes",
    "grayworld": "baselines",
    "maxrgb": "baselines",
    "specular_highlight": "baselines",
    "apply_global": "baselines",
    "NetConfig": "nnet",
    "NetParams": "nnet",
    "forward": "nnet",
    "mse_loss": "nnet",
    "backward": "nnet",
    "recalibrate": "nnet",
    "TrainConfig": "training",
    "train": "training",
    "augment": "training",
    "cosine_similarity": "metrics",
    "dsc": "metrics",
    "nsd": "metrics",
    "mae": "metrics",
    "centroid_segment": "tasks",
    "unmix": "tasks",
    "BenchmarkConfig": "benchmark",
    "EvalReport": "benchmark",
    "run_benchmark": "benchmark",
    "RunConfig": "config",
    "load_run_config": "config",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name: str):
    module = _EXPORTS.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    return getattr(import_module(f".{module}", __name__), name)


def __dir__():
    return __all__
