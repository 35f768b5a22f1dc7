"""Training configuration shared by the trainer and the CLI."""

from __future__ import annotations

from dataclasses import asdict, dataclass

from .errors import ConfigError

OT_VARIANTS = ("otnn", "otnn_preselect", "otnn_sloss", "otnn_preselect_sloss")
BASELINES = ("target_ft", "seq_ft", "mixed_ft", "knn_ft")
TRAIN_MODES = BASELINES + OT_VARIANTS

#: Neighborhood sizes documented for k-grid sweeps.
K_GRID = (10, 30, 50, 70, 100, 200, 300, 400, 500)


@dataclass
class TrainConfig:
    """Hyper-parameters for one training run.

    Defaults follow the reference configuration: alpha 0.05, beta 10,
    epsilon 0.2, lambda 0.5, theta_t 10, batch size 32, 10 epochs.
    ``theta_s`` is derived from the variant when left unset: 0 for the
    plain variants, 1 for the sloss variants and the fine-tuning
    baselines.
    """

    alpha: float = 0.05
    beta: float = 10.0
    epsilon: float = 0.2
    lam: float = 0.5
    theta_s: float | None = None
    theta_t: float = 10.0
    k: int = 100
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    variant: str = "otnn"
    learning_rate: float = 1e-3
    hidden_dim: int = 64
    use_ed: bool = True
    use_lc: bool = True
    solver_tol: float = 1e-6
    solver_max_iter: int = 1000

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.variant not in TRAIN_MODES:
            raise ConfigError(
                f"unknown variant {self.variant!r}; choose from {TRAIN_MODES}"
            )
        if self.alpha < 0 or self.beta < 0:
            raise ConfigError("alpha and beta must be >= 0")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be > 0")
        if self.lam <= 0:
            raise ConfigError("lambda must be > 0")
        if self.theta_s is not None and self.theta_s < 0:
            raise ConfigError("theta_s must be >= 0")
        if self.theta_t < 0:
            raise ConfigError("theta_t must be >= 0")
        for name in ("k", "batch_size", "epochs", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.is_ot_mode and not (self.use_ed or self.use_lc):
            raise ConfigError("at least one of use_ed/use_lc must be set")

    @property
    def is_ot_mode(self) -> bool:
        return self.variant in OT_VARIANTS

    @property
    def uses_preselect(self) -> bool:
        return self.variant in (
            "otnn_preselect",
            "otnn_preselect_sloss",
            "knn_ft",
        )

    @property
    def resolved_theta_s(self) -> float:
        if self.theta_s is not None:
            return self.theta_s
        if self.variant in ("otnn", "otnn_preselect"):
            return 0.0
        return 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)
