"""Model definitions and a seeded training loop.

Both architectures are plain nn.Sequential stacks restricted to the layer
vocabulary the SAWT format can express: Conv2d (square kernel, uniform
stride and padding), ReLU, MaxPool2d(2), Flatten, and Linear.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

ARCHITECTURES = ("logreg", "cnn")

ACCURACY_FLOORS = {"logreg": 0.90, "cnn": 0.97}


def build_model(arch: str) -> nn.Sequential:
    """Construct an untrained model for the given architecture name."""
    if arch == "logreg":
        return nn.Sequential(nn.Flatten(), nn.Linear(28 * 28, 10))
    if arch == "cnn":
        return nn.Sequential(
            nn.Conv2d(1, 8, kernel_size=3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Conv2d(8, 16, kernel_size=3, padding=1),
            nn.ReLU(),
            nn.MaxPool2d(2),
            nn.Flatten(),
            nn.Linear(16 * 7 * 7, 32),
            nn.ReLU(),
            nn.Linear(32, 10),
        )
    raise ValueError(f"unknown architecture {arch!r}, expected one of {ARCHITECTURES}")


def _to_batch_tensor(images: np.ndarray) -> torch.Tensor:
    """Convert (n, 28, 28) pixel arrays to a (n, 1, 28, 28) float tensor.

    uint8 input is scaled to [0, 1]; float input is assumed to already be
    in [0, 1] and is only cast.
    """
    arr = np.asarray(images)
    if arr.dtype == np.uint8:
        arr = arr.astype(np.float32) / 255.0
    else:
        arr = arr.astype(np.float32)
    return torch.from_numpy(arr).unsqueeze(1)


def train_model(
    arch: str,
    train_images: np.ndarray,
    train_labels: np.ndarray,
    *,
    epochs: int = 6,
    batch_size: int = 128,
    lr: float = 1e-3,
    seed: int = 0,
) -> nn.Sequential:
    """Train a model with Adam and cross-entropy under a fixed torch seed.

    The seed covers both parameter initialization and the per-epoch batch
    shuffle, so repeated calls return identical weights.
    """
    torch.manual_seed(seed)
    model = build_model(arch)
    model.train()
    x = _to_batch_tensor(train_images)
    y = torch.from_numpy(np.asarray(train_labels, dtype=np.int64))
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    loss_fn = nn.CrossEntropyLoss()
    n = x.shape[0]
    for _ in range(epochs):
        order = torch.randperm(n)
        for start in range(0, n, batch_size):
            idx = order[start : start + batch_size]
            optimizer.zero_grad()
            loss = loss_fn(model(x[idx]), y[idx])
            loss.backward()
            optimizer.step()
    model.eval()
    return model


def predict_batch(model: nn.Sequential, images: np.ndarray) -> np.ndarray:
    """Return argmax class indices for a batch of images."""
    model.eval()
    with torch.no_grad():
        logits = model(_to_batch_tensor(images))
    return logits.argmax(dim=1).numpy()


def accuracy(model: nn.Sequential, images: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of images whose argmax prediction matches the label."""
    preds = predict_batch(model, images)
    return float(np.mean(preds == np.asarray(labels, dtype=np.int64)))
