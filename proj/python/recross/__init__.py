# Copyright 2026 The recross Authors
# SPDX-License-Identifier: Apache-2.0
"""Retrieval augmentation for cross-task generalization."""

import json as _json

from ._recross import *  # noqa: F401,F403
from ._recross import RecrossError, run as _run

__version__ = "0.1.0"


def run_report(*args, **kwargs):
    """Runs the pipeline and returns the report as a dict."""
    return _json.loads(_run(*args, **kwargs))
