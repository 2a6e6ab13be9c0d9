"""Coherent-noise simulation of the surface code with fermionic Gaussian states."""
from .layout import CodeLayout, build
from .prep import PrepNoise, PrepSimulator, run_prep_trial
from .storage import StorageNoise, StorageSimulator, run_storage_trial, twirl_baseline

__version__ = "0.1.0"

__all__ = [
    "CodeLayout",
    "build",
    "PrepNoise",
    "PrepSimulator",
    "run_prep_trial",
    "StorageNoise",
    "StorageSimulator",
    "run_storage_trial",
    "twirl_baseline",
]
