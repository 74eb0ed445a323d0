"""
Configuration module for the GSSC trainer
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Runtime Settings
THREADS = int(os.getenv("GSSC_THREADS", "0")) or None
THREAD_ENV_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

# Numerical Settings
BN_EPS = 1e-5
BN_MOMENTUM = 0.1
MIN_FUSED_PROB = 1e-12
DEGENERATE_EPS = 1e-8

# Initialization Settings
SPARSIFIER_INIT_SCORE = 2.0

# Artifact Settings
CHECKPOINT_FORMAT = "gssc-checkpoint/1"
PROVENANCE_FILE = "provenance.json"
MANIFEST_FILE = "manifest.json"
METRICS_FILE = "metrics.jsonl"
BEST_CHECKPOINT = "best.ckpt"
FINAL_CHECKPOINT = "final.ckpt"

# Logging Settings
LOG_LEVEL = os.getenv("GSSC_LOG_LEVEL", "INFO")
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'
