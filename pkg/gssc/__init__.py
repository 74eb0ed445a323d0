"""
GSSC: graph structure self-contrasting node classification
"""

import os

from .config import THREADS, THREAD_ENV_VARS

# BLAS pools read these once, on first numpy import
if THREADS:
    for _var in THREAD_ENV_VARS:
        os.environ[_var] = str(THREADS)

__version__ = "0.1.0"

__all__ = ['__version__']
