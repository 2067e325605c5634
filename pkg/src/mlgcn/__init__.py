"""Multi-label GCN with co-embedded label vectors trained by negative sampling."""

from .embed import (
    NoiseDistribution,
    PairSets,
    build_noise_distribution,
    build_pair_sets,
    label_label_loss,
    node_label_loss,
    sample_negatives,
)
from .errors import ConfigError, DatasetError, MLGCNError, SamplerError, ShapeError, TrainingError
from .gcn import GcnParams, bce_loss, gcn_backward, gcn_forward
from .graph import Graph, SyntheticSpec, generate_synthetic, load_dataset, normalize_adjacency, save_dataset
from .metrics import MetricReport, micro_f1
from .optim import AdamState, adam_step
from .protocols import run_ablation, run_size_sweep
from .trainer import LossReport, TrainConfig, gradcheck, predict, train

__version__ = "0.1.0"
