"""Teacher-forced training over synthetic quadruplets."""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from .model import NonFiniteLossError, collate_quadruplets, forward_loss, save_checkpoint
from .sdc import SyntheticQuadruplet
from .tokenizer import Tokenizer

logger = logging.getLogger(__name__)

LR_GRID = (1e-6, 2e-6, 1e-5, 2e-5)
BATCH_GRID = (8, 16)


@dataclass(frozen=True)
class TrainConfig:
    """Optimiser and loop settings.

    Defaults are the full-scale values (Adam, lr 2e-6, batch 8, 5 epochs,
    eps 1e-4, linearly decaying learning rate). Desk-scale runs on tiny
    models need a far larger learning rate, e.g. 3e-3. ``max_steps``, when
    set, replaces ``epochs * ceil(n / batch_size)`` as the step budget.
    """

    learning_rate: float = 2e-6
    batch_size: int = 8
    epochs: int = 5
    adam_eps: float = 1e-4
    weight_decay_schedule: str = "linear"
    weight_decay: float = 0.0
    seed: int = 0
    grad_clip: float | None = None
    eval_every: int = 0
    max_steps: int | None = None
    checkpoint_retries: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("invalid batch_size / epochs")
        if self.weight_decay_schedule != "linear":
            raise ValueError("only the linear schedule is supported")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown train config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class TrainReport:
    seed: int
    loss_curve: list[tuple[int, float]] = field(default_factory=list)
    dev_metrics: list[dict] = field(default_factory=list)
    wall_clock: float = 0.0
    final_checkpoint: str | None = None
    best_checkpoint: str | None = None
    total_steps: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def lr_schedule(step: int, total_steps: int, base_lr: float) -> float:
    if not 0 <= step <= total_steps:
        raise ValueError("step outside [0, total_steps]")
    if total_steps == 0:
        return base_lr
    return base_lr * (1.0 - step / total_steps)


def split_dev(
    quads: Sequence[SyntheticQuadruplet], fraction: float = 0.02, seed: int = 0
) -> tuple[list[SyntheticQuadruplet], list[SyntheticQuadruplet]]:
    """Hold out whole products (never single quadruplets) for development."""
    pids = sorted({q.product_id for q in quads})
    n_dev = int(round(fraction * len(pids)))
    order = np.random.default_rng(seed).permutation(len(pids))
    dev_ids = {pids[i] for i in order[:n_dev]}
    train = [q for q in quads if q.product_id not in dev_ids]
    dev = [q for q in quads if q.product_id in dev_ids]
    return train, dev


def total_steps_for(n_items: int, cfg: TrainConfig) -> int:
    if cfg.max_steps is not None:
        return cfg.max_steps if cfg.epochs > 0 else 0
    return cfg.epochs * math.ceil(n_items / cfg.batch_size)


def _save(path: Path, model, tok, extra, retries: int) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    for attempt in range(retries + 1):
        try:
            save_checkpoint(path, model, tok, extra)
            return
        except OSError:
            if attempt == retries:
                raise
            time.sleep(0.1)


def dev_loss(model, tok: Tokenizer, dev: Sequence[SyntheticQuadruplet], batch_size: int) -> float:
    model.eval()
    total = 0.0
    count = 0
    with torch.no_grad():
        for i in range(0, len(dev), batch_size):
            loss, n = forward_loss(model, collate_quadruplets(tok, model.cfg, dev[i : i + batch_size]))
            total += float(loss) * n
            count += n
    return total / count


def train(
    model,
    tok: Tokenizer,
    quadruplets: Sequence[SyntheticQuadruplet],
    cfg: TrainConfig,
    dev: Sequence[SyntheticQuadruplet] = (),
    out_dir=None,
) -> tuple[object, TrainReport]:
    """Fit ``model`` in place; returns it with a report.

    Batch order comes from a generator seeded with ``cfg.seed``, so a fixed
    seed, data and config reproduce the loss curve bit for bit. With
    ``out_dir`` set, checkpoints go to ``run-<seed>/step-<n>/model.pt``,
    one per dev evaluation plus the final step, and ``train_log.jsonl``
    records every step.
    """
    quadruplets = list(quadruplets)
    if not quadruplets:
        raise ValueError("no training quadruplets")
    report = TrainReport(seed=cfg.seed)
    total = total_steps_for(len(quadruplets), cfg)
    report.total_steps = total
    if total == 0:
        return model, report

    gen = torch.Generator().manual_seed(cfg.seed)
    model.attach_generator(gen)
    opt = torch.optim.AdamW(
        model.parameters(), lr=cfg.learning_rate, eps=cfg.adam_eps, weight_decay=cfg.weight_decay, foreach=False
    )
    sched = torch.optim.lr_scheduler.LambdaLR(opt, lambda s: lr_schedule(min(s, total), total, 1.0))
    run_dir = Path(out_dir) / f"run-{cfg.seed}" if out_dir is not None else None
    log = None
    if run_dir:
        run_dir.mkdir(parents=True, exist_ok=True)
        log = (run_dir / "train_log.jsonl").open("w", encoding="utf-8")

    start = time.perf_counter()
    best = math.inf
    step = 0
    try:
        while step < total:
            order = torch.randperm(len(quadruplets), generator=gen).tolist()
            for b in range(0, len(order), cfg.batch_size):
                if step >= total:
                    break
                items = [quadruplets[i] for i in order[b : b + cfg.batch_size]]
                model.train()
                opt.zero_grad()
                try:
                    loss, _ = forward_loss(model, collate_quadruplets(tok, model.cfg, items), batch_id=step)
                except NonFiniteLossError as exc:
                    raise NonFiniteLossError(f"non-finite loss at step {step}", exc.batch_id) from None
                loss.backward()
                if cfg.grad_clip is not None:
                    torch.nn.utils.clip_grad_norm_(model.parameters(), cfg.grad_clip)
                opt.step()
                sched.step()
                step += 1
                value = loss.item()
                report.loss_curve.append((step, value))
                if log:
                    log.write(json.dumps({"step": step, "loss": value, "lr": sched.get_last_lr()[0]}) + "\n")

                if cfg.eval_every and dev and step % cfg.eval_every == 0:
                    d = dev_loss(model, tok, dev, cfg.batch_size)
                    report.dev_metrics.append({"step": step, "dev_loss": d})
                    if run_dir and d < best:
                        best = d
                        path = run_dir / f"step-{step}" / "model.pt"
                        _save(path, model, tok, {"step": step, "dev_loss": d}, cfg.checkpoint_retries)
                        report.best_checkpoint = str(path)
    finally:
        if log:
            log.close()
    model.eval()
    model.attach_generator(None)
    report.wall_clock = time.perf_counter() - start
    if run_dir:
        path = run_dir / f"step-{step}" / "model.pt"
        # the best-dev checkpoint may already hold these exact weights
        if report.best_checkpoint != str(path):
            _save(path, model, tok, {"step": step}, cfg.checkpoint_retries)
        report.final_checkpoint = str(path)
        if report.best_checkpoint is None:
            report.best_checkpoint = report.final_checkpoint
    return model, report
