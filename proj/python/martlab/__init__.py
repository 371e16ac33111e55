"""Martingales on regular trees."""

import json

from ._core import *  # noqa: F401,F403
from ._core import __version__, run_config as _run_config


def run(config):
    """Run an experiment config (dict or JSON text) and return the artifact text."""
    if not isinstance(config, str):
        config = json.dumps(config)
    return _run_config(config)
