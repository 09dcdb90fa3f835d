"""Compatible matrix products, dressing operators, Lax flows and the deformed chiral model."""

import json

from ._pencil import *  # noqa: F401,F403
from ._pencil import PencilError, default_config as _default_config, run_json as _run_json


def default_config():
    """The default run configuration as a dict."""
    return json.loads(_default_config())


def run(command, config=None, out="out", assignments=()):
    """Run a driver command in-process. Returns (exit_code, summary dict)."""
    code, summary = _run_json(command, json.dumps(config or {}), list(assignments), str(out))
    return code, json.loads(summary)


__all__ = [name for name in dir() if not name.startswith("_")] + ["PencilError"]
