# config.py
#
# This module defines the AppConfig class, which centralizes application-wide defaults.
# It holds the fixed hyperparameters of the superpixel graph method, the derived defaults
# for segmentation, training and scale selection, dataset presets, and output locations.
# Access these settings via AppConfig.PROPERTY_NAME.
#
# Usage: Imported by models.config to fill omitted PipelineConfig fields, and by main.py
# for environment-driven overrides.
#
# Helper modules: Uses os and python-dotenv for environment variable overrides.

import os

from dotenv import load_dotenv


class AppConfig:
    """
    Centralized configuration class for the pipeline.
    Stores the published parameter table, derived defaults, presets and paths.
    """

    # --- Feature extraction / graph construction (published parameter table) ---
    WEIGHTED_KERNEL_H = 15.0      # softmax kernel of the neighbour-weighted features
    GRAPH_BETA = 0.9              # balance between mean and weighted feature kernels
    GRAPH_SIGMA_S = 0.20          # feature kernel width
    GRAPH_SIGMA_L = 0.20          # location kernel width (centroids scaled by max(H, W))
    GRAPH_KNN = 8                 # k-NN count
    LGC_MU = 0.01                 # smoothness weight in the training loss

    # --- Preprocessing ---
    PCA_VARIANCE_TARGET = 0.999

    # --- Segmentation ---
    SEGMENT_MIN_SIZE = 20
    SEGMENT_SMOOTHING_SIGMA = 0.8
    SEGMENT_SCALE_MULTIPLIER = 3.0   # scale_k = multiplier * median edge weight
    MAX_SUPERPIXELS = 1000

    # --- Model ---
    MODEL_KIND = "mobgcn"
    MODEL_HIDDEN = 32
    MODEL_TEMPERATURE = 1.0
    MODEL_USE_NORM = True
    MODEL_COARSEN_NORM = True
    NODE_FEATURES = "concat"

    # --- Training / evaluation ---
    TRAIN_FRACTION = 0.05
    TRAIN_LEARNING_RATE = 0.01
    TRAIN_EPOCHS = 300
    TRAIN_REPEATS = 10
    TRAIN_SEED = 0
    ADAM_BETA1 = 0.9
    ADAM_BETA2 = 0.999
    ADAM_EPS = 1e-8
    LGC_PROPAGATION_ITERATIONS = 10000
    LGC_PROPAGATION_TOL = 1e-10

    # --- Scale selection ---
    SCALES_TOP_M = 5
    SCALES_MIN = 2
    SCALES_MAX = 100
    IFOREST_TREES = 100
    IFOREST_SUBSAMPLE = 256
    IFOREST_CONTAMINATION = 0.05
    KMEANS_MAX_ITER = 100
    KMEANS_TOL = 1e-6

    # --- File paths ---
    OUTPUT_DIR = "runs"
    LOG_LEVEL = "INFO"

    # --- Dataset presets ---
    # shape, min segment size, reported node count, class-count resolutions and the
    # optimal scales reported for each benchmark scene.
    DATASET_PRESETS = {
        "indian": {"shape": (145, 145), "min_size": 10, "nodes": 668, "classes": 16,
                   "resolutions": [16], "optimal_scales": [42, 24, 17, 8, 4]},
        "salinas": {"shape": (512, 217), "min_size": 100, "nodes": 239, "classes": 16,
                    "resolutions": [16], "optimal_scales": [55, 31, 23, 14, 10, 4]},
        "pavia": {"shape": (1096, 715), "min_size": 200, "nodes": 921, "classes": 9,
                  "resolutions": [9], "optimal_scales": [71, 17, 14, 8, 5]},
        "botswana": {"shape": (1476, 256), "min_size": 200, "nodes": 431, "classes": 14,
                     "resolutions": [14], "optimal_scales": [9, 7, 5]},
        "kennedy": {"shape": (512, 614), "min_size": 100, "nodes": 522, "classes": 13,
                    "resolutions": [13], "optimal_scales": [55, 17, 12, 6]},
        "toronto": {"shape": (724, 632), "min_size": 200, "nodes": 403, "classes": 4,
                    "resolutions": [4], "optimal_scales": [55, 24, 22, 18]},
    }

    @classmethod
    def load_environment(cls):
        """
        Apply overrides from the process environment (and a .env file if present).
        Only the run-level settings are environment-configurable; model hyperparameters
        come from the JSON config or command-line flags.
        """
        load_dotenv()
        cls.OUTPUT_DIR = os.getenv("MOBGCN_OUTPUT_DIR", cls.OUTPUT_DIR)
        cls.LOG_LEVEL = os.getenv("MOBGCN_LOG_LEVEL", cls.LOG_LEVEL).upper()
        seed = os.getenv("MOBGCN_SEED")
        if seed is not None:
            cls.TRAIN_SEED = int(seed)
        repeats = os.getenv("MOBGCN_REPEATS")
        if repeats is not None:
            cls.TRAIN_REPEATS = int(repeats)
        return cls
