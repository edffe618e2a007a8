"""Byzantine-robust federated learning with split-gradient scoring.

The package provides six classic robust aggregation rules, a split-gradient
meta-defense that scores clients per coordinate group before averaging the
trustworthy ones, an omniscient model-poisoning attack suite, and a
deterministic desk-scale federated simulation harness.
"""

from .aggregators import (AggregatorSpec, ResilienceReport, aggregate, bucketing_wrap,
                          bulyan, coordinate_median, coordinate_trimmed_mean, dnc,
                          estimate_resilience, geometric_median, multi_krum)
from .attacks import AttackContext, AttackSpec, craft
from .core import (IndexPartition, SeedSpec, extract_subvector, l2_norm, make_partition,
                   mean)
from .data import (DirichletPartition, SyntheticDataset, SyntheticGradientModel,
                   dirichlet_partition, generate_synthetic)
from .gas import GasConfig, KnownF, Ratio, ScoreTable, SelectionResult, gas_aggregate
from .models import Model
from .simulation import (BucketedDefense, DataConfig, ExperimentConfig, GasDefense,
                         PlainDefense, RoundRecord, TrainerConfig, local_train,
                         run_experiment, run_round, run_single)

__version__ = "0.1.0"
