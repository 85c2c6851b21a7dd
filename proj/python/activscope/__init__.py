"""CNN interpretability workbench."""

from . import _core
from ._core import (
    ActivscopeError,
    Model,
    fov_box,
    generate_scene,
    load_features,
    receptive_field,
)

__all__ = [
    "ActivscopeError",
    "Model",
    "fov_box",
    "generate_scene",
    "load_features",
    "receptive_field",
    "run_experiment",
]


def run_experiment(n, root, config, tags=None):
    """Runs experiment n (1 to 4) under root and returns its report as a dict."""
    import json
    import os

    tags = os.fspath(tags) if tags is not None else None
    return json.loads(_core._run_experiment(n, os.fspath(root), json.dumps(config), tags))
