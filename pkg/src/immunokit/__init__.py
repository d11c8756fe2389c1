"""immunokit: desk-scale epitope scoring, multi-epitope vaccine assembly,
and within-host immune dynamics."""

from . import assembly, dynamics, metrics, nn, pipeline, predictor, seqdata, svgplot, training
from .assembly import SupertypeRequirement, VaccineCandidate, assemble, coverage_report
from .dynamics import (
    Cd8Params,
    Exhaustion,
    ImmuneState,
    ProliferationParams,
    Trajectory,
    classify_outcome,
    convergence_ratio,
    dose_sweep,
    saturating_rate,
    simulate_cd8,
    simulate_proliferation,
)
from .metrics import ConfusionMatrix, MetricReport, confusion, derived_metrics, pr_curve, roc_auc, roc_curve
from .pipeline import (
    AutoencoderSelector,
    CnnClassifier,
    GanModel,
    GanSample,
    SelectorScore,
    generate_candidates,
    score_epitopes,
    train_autoencoder_selector,
    train_cnn_classifier,
    train_gan,
)
from .predictor import Model1, Model1Output, multitask_loss, train_model1
from .seqdata import (
    Dataset,
    EpitopeRecord,
    generate_synthetic,
    load_records,
    parse_fasta,
    split_dataset,
    write_records,
)
from .training import LossWeights, TrainConfig, TrainReport, bce

__version__ = "0.1.0"
