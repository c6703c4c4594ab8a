"""Digit classifier training and SAWT export."""

from .conformance import load_conformance_file, make_conformance_cases, naive_conv2d, write_conformance_file
from .data import (
    FONT_FILES,
    corpus_fingerprint,
    load_idx_images,
    load_idx_labels,
    make_corpus,
    render_digit,
    write_idx_images,
    write_idx_labels,
    write_label_csv,
    write_raw_tensor,
)
from .export import sawt_bytes, save_sawt, write_manifest
from .models import (
    ACCURACY_FLOORS,
    ARCHITECTURES,
    accuracy,
    build_model,
    predict_batch,
    train_model,
)

__version__ = "0.1.0"

__all__ = [
    "ACCURACY_FLOORS",
    "ARCHITECTURES",
    "FONT_FILES",
    "accuracy",
    "build_model",
    "corpus_fingerprint",
    "load_conformance_file",
    "load_idx_images",
    "load_idx_labels",
    "make_conformance_cases",
    "make_corpus",
    "naive_conv2d",
    "predict_batch",
    "render_digit",
    "save_sawt",
    "sawt_bytes",
    "train_model",
    "write_conformance_file",
    "write_idx_images",
    "write_idx_labels",
    "write_label_csv",
    "write_manifest",
    "write_raw_tensor",
]
