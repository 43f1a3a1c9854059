from .augment import Augmenter, ClassGan, WindowCodec, augmentation_counts, fit_augmenter
from .io import (SCHEMA_VERSION, read_trajectories, read_windows_csv, write_trajectories,
                 write_windows_csv)
from .labeling import UNLABELED, feature_matrix, heuristic_label, heuristic_labels, tail_features
from .lsgan import Generator, LsganConfig, LsganHistory, lsgan_generate, lsgan_train
from .mmd import median_bandwidth, mmd_rbf
from .sfcm import SfcmConfig, SfcmResult, fcm_reference, priors_from_labels, sfcm_fit
from .simulate import (CATEGORIES, STABLE, UNSTABLE, GeneratorConfig, ScenarioGrid, Trajectory,
                       simulate_trajectories, simulate_trajectory)
from .validation import TstrResult, tstr_trts_eval

__all__ = [
    "CATEGORIES", "SCHEMA_VERSION", "STABLE", "UNLABELED", "UNSTABLE", "Augmenter", "ClassGan",
    "Generator", "GeneratorConfig", "LsganConfig", "LsganHistory", "ScenarioGrid", "SfcmConfig",
    "SfcmResult", "Trajectory", "TstrResult", "WindowCodec", "augmentation_counts",
    "fcm_reference", "feature_matrix", "fit_augmenter", "heuristic_label", "heuristic_labels",
    "lsgan_generate", "lsgan_train", "median_bandwidth", "mmd_rbf", "priors_from_labels",
    "read_trajectories", "read_windows_csv", "sfcm_fit", "simulate_trajectories",
    "simulate_trajectory", "tail_features", "tstr_trts_eval", "write_trajectories",
    "write_windows_csv",
]
