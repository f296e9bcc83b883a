"""Per-sample SGD training loop and its report."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..exceptions import ContractError
from ..validation import check_positive_int


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 10_000
    minibatch: int = 1
    learning_rate: float = 0.01
    seed: int = 0
    eval_samples: int = 200
    log_every: int = 100

    def __post_init__(self):
        if self.iterations < 0:
            raise ContractError("iterations must be non-negative")
        check_positive_int(self.minibatch, "minibatch")
        if self.learning_rate < 0:
            raise ContractError("learning_rate must be non-negative")


@dataclass
class TrainReport:
    model: str
    iterations: int
    wall_seconds: float
    initial_loss: float
    final_loss: float
    accuracy: float
    loss_curve: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)


def evaluate(model, images, labels):
    """Mean cross-entropy and accuracy over a dataset, without touching gradients."""
    losses, correct = [], 0
    for x, y in zip(images, labels):
        logits = model.forward(x)
        loss, _ = model.loss_fn(logits, int(y))
        losses.append(loss)
        correct += int(np.argmax(logits) == y)
    return float(np.mean(losses)), correct / len(labels)


class Trainer:
    """Resumable SGD loop: ``run`` may be called repeatedly until ``cfg.iterations`` are done.

    Samples are visited in seeded shuffled epochs. ``loss_curve`` holds the
    mean training loss of each ``log_every`` consecutive iterations; the
    initial/final losses and accuracy are measured on the first
    ``eval_samples`` samples. Only the update loop is timed.
    """

    def __init__(self, model, dataset, cfg):
        images, labels = dataset
        if len(images) == 0 or len(images) != len(labels):
            raise ContractError("dataset must be a non-empty (images, labels) pair of equal length")
        self.model = model
        self.cfg = cfg
        dtype = next(iter(model.parameters().values())).dtype
        self.images = np.ascontiguousarray(images, dtype=dtype)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.n_eval = min(cfg.eval_samples, len(self.images))
        self.initial_loss, _ = evaluate(model, self.images[: self.n_eval], self.labels[: self.n_eval])
        self.rng = np.random.default_rng(cfg.seed)
        self.order = self.rng.permutation(len(self.images))
        self.cursor = 0
        self.done = 0
        self.wall = 0.0
        self.curve = []
        self.window = []

    @property
    def remaining(self):
        return self.cfg.iterations - self.done

    def run(self, iterations=None):
        """Run up to ``iterations`` more updates (default: all that remain)."""
        n = self.remaining if iterations is None else min(iterations, self.remaining)
        model, cfg = self.model, self.cfg
        images, labels = self.images, self.labels
        scale = 1.0 / cfg.minibatch
        start = time.perf_counter()
        for _ in range(n):
            model.zero_grad()
            batch_loss = 0.0
            for _ in range(cfg.minibatch):
                if self.cursor == len(self.order):
                    self.order = self.rng.permutation(len(images))
                    self.cursor = 0
                k = self.order[self.cursor]
                self.cursor += 1
                batch_loss += model.loss_and_backward(images[k], int(labels[k]))
            model.sgd_step(cfg.learning_rate, scale)
            self.window.append(batch_loss * scale)
            if len(self.window) == cfg.log_every:
                self.curve.append(float(np.mean(self.window)))
                self.window = []
        self.wall += time.perf_counter() - start
        self.done += n
        return self

    def report(self):
        curve = list(self.curve)
        if self.window:
            curve.append(float(np.mean(self.window)))
        final_loss, accuracy = evaluate(
            self.model, self.images[: self.n_eval], self.labels[: self.n_eval]
        )
        return TrainReport(
            model=self.model.name,
            iterations=self.done,
            wall_seconds=self.wall,
            initial_loss=self.initial_loss,
            final_loss=final_loss,
            accuracy=accuracy,
            loss_curve=curve,
            config=asdict(self.cfg),
        )


def train(model, dataset, cfg):
    """Train ``model`` with plain SGD on ``(images, labels)``; see :class:`Trainer`."""
    return Trainer(model, dataset, cfg).run().report()


def compare_training(dataset, cfg, precision="single", chunk=250, warmup=20):
    """Train the conventional and proposed models from the same seed.

    The two runs alternate in blocks of ``chunk`` iterations so slow drift in
    machine speed lands on both sides instead of on whichever ran second.
    Each model still sees exactly the update sequence of a standalone
    :func:`train` call. A few throwaway updates on separate copies warm up
    compiled code before timing. Returns ``(conventional, proposed, ratio)``
    with ``ratio = conventional wall time / proposed wall time``.
    """
    from .models import build_model

    check_positive_int(chunk, "chunk")
    if warmup:
        for variant in ("conventional", "proposed"):
            Trainer(
                build_model(variant, cfg.seed, precision),
                dataset,
                replace(cfg, iterations=warmup, eval_samples=1),
            ).run()
    trainers = [
        Trainer(build_model(variant, cfg.seed, precision), dataset, cfg)
        for variant in ("conventional", "proposed")
    ]
    while any(t.remaining for t in trainers):
        for t in trainers:
            t.run(chunk)
    conventional, proposed = (t.report() for t in trainers)
    ratio = conventional.wall_seconds / proposed.wall_seconds if proposed.wall_seconds > 0 else float("nan")
    return conventional, proposed, ratio
