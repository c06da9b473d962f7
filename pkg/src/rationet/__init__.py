"""Neural likelihood-ratio estimation through paired loss design.

The package trains a small fully connected network so that its output
approximates a chosen transformation of the density ratio f1/f0, then
builds hypothesis tests, divergence estimates, sequential detectors, and
local statistics on top of that estimate.

Submodules are imported lazily: `import rationet` stays cheap, and the
command-line entry point can pin BLAS thread counts before numpy loads.
"""

from importlib import import_module

__version__ = "0.1.0"

_SUBMODULES = (
    "cli",
    "config",
    "data",
    "errors",
    "estimators",
    "evaluation",
    "experiments",
    "figures",
    "local",
    "losses",
    "markov",
    "network",
    "training",
)

__all__ = list(_SUBMODULES) + ["__version__"]


def __getattr__(name):
    if name in _SUBMODULES:
        module = import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
