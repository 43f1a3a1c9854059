from .attacks import (METHODS, AdvBatch, AdvExample, AttackConfig, cw_attack, input_gradient,
                      mi_fgsm, pgd, run_attack, voltage_channels)
from .defense import (THREATS, RobustnessReport, Surrogate, ThreatModel, adversarial_training,
                      attack, default_training_attacks, gray_box_attack, robustness_eval,
                      train_surrogate, weight_checksum)

__all__ = [
    "METHODS", "THREATS", "AdvBatch", "AdvExample", "AttackConfig", "RobustnessReport", "Surrogate",
    "ThreatModel", "adversarial_training", "attack", "cw_attack", "default_training_attacks",
    "gray_box_attack", "input_gradient", "mi_fgsm", "pgd", "robustness_eval", "run_attack",
    "train_surrogate", "voltage_channels", "weight_checksum",
]
