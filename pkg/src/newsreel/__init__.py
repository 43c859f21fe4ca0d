"""newsreel: chaptering long-form TV news recordings from multimodal per-shot features."""

from .timeline import (
    Chapter,
    ChapterLabels,
    ChapterList,
    Shot,
    TimeInterval,
    assign_chapter_labels,
    chapters_from_boundaries,
    chapters_from_labels,
    interval_iou,
    validate_partition,
)
from .audio import MfccMatrix, MfccParams, compute_mfcc, pool_mfcc
from .video import FrameDescriptor, detect_shots, frame_descriptor
from .stores import read_store, write_store
from .datasets import DiarSegment, VideoRecord, load_video_record, split_dataset
from .synthetic import SyntheticSpec, generate_synthetic, load_corpus
from .features import (
    SILENCE,
    FeatureSequence,
    NormalizerStats,
    assemble_sequence,
    encode_speaker,
    fit_normalizer,
    speaker_for_shot,
)
from .models import ModelParameters, ModelSpec, build_model, forward
from .optim import OptimizerState, adam_step, cosine_lr, init_optimizer
from .training import TrainConfig, load_model, loss_and_gradients, save_model, train
from .chaptering import (
    adjacency_set,
    adjacent_frobenius_loss,
    anchor_segment,
    distance_matrix,
    segment_by_threshold,
    sweep_threshold,
    target_matrix,
    zero_shot_segment,
)
from .metrics import MetricReport, aggregate, evaluate, format_table, match_one_to_one

__version__ = "0.1.0"
