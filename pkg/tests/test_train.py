import json
import math

import pytest
import torch

from medos.model import ModelConfig, NonFiniteLossError, build_model, load_checkpoint
from medos.tokenizer import Tokenizer
from medos.train import TrainConfig, lr_schedule, split_dev, total_steps_for, train


def _texts(quads):
    out = []
    for q in quads:
        out += [*q.input_reviews, q.description or "", *q.qa, q.pseudo_summary]
    return out


@pytest.fixture(scope="module")
def tok(quads10):
    return Tokenizer.build(_texts(quads10))


def _model(tok, seed=0):
    cfg = ModelConfig(
        vocab_size=len(tok), d_model=16, num_layers=1, num_heads=2,
        max_review_len=128, max_desc_len=32, max_qa_len=64, max_tgt_len=32,
    )
    return build_model(cfg, seed=seed)


def test_lr_schedule_examples():
    assert lr_schedule(0, 100, 0.5) == 0.5
    assert lr_schedule(100, 100, 0.5) == 0.0
    assert lr_schedule(50, 100, 0.5) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        lr_schedule(101, 100, 0.5)
    with pytest.raises(ValueError):
        lr_schedule(-1, 100, 0.5)


def test_config_defaults_and_validation(tmp_path):
    cfg = TrainConfig()
    assert (cfg.learning_rate, cfg.batch_size, cfg.epochs, cfg.adam_eps) == (2e-6, 8, 5, 1e-4)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0)
    with pytest.raises(ValueError, match="unknown"):
        TrainConfig.from_dict({"lr": 1.0})
    path = tmp_path / "train.json"
    path.write_text(json.dumps({"learning_rate": 0.01, "seed": 4}))
    assert TrainConfig.from_file(path) == TrainConfig(learning_rate=0.01, seed=4)


def test_step_budget():
    assert total_steps_for(10, TrainConfig(batch_size=4, epochs=3)) == 9
    assert total_steps_for(10, TrainConfig(epochs=2, max_steps=7)) == 7
    assert total_steps_for(10, TrainConfig(epochs=0, max_steps=7)) == 0


def test_split_dev_holds_out_whole_products(quads10):
    many = [q for q in quads10 for _ in range(3)]
    tr, dev = split_dev(many, fraction=0.2, seed=1)
    assert len(dev) == 6 and len(tr) + len(dev) == len(many)
    assert not {q.product_id for q in tr} & {q.product_id for q in dev}
    assert split_dev(many, 0.2, 1) == (tr, dev)


def test_zero_epochs_is_a_no_op(quads10, tok):
    model = _model(tok)
    before = {k: v.clone() for k, v in model.state_dict().items()}
    model, report = train(model, tok, quads10, TrainConfig(epochs=0))
    assert report.loss_curve == []
    assert all(torch.equal(before[k], v) for k, v in model.state_dict().items())


def test_empty_data_rejected(tok):
    with pytest.raises(ValueError):
        train(_model(tok), tok, [], TrainConfig())


def test_same_seed_same_curve_and_checkpoint_bytes(quads10, tok, tmp_path):
    cfg = TrainConfig(learning_rate=3e-3, batch_size=4, epochs=1, max_steps=12, seed=3)
    _, a = train(_model(tok), tok, quads10, cfg, out_dir=tmp_path / "a")
    _, b = train(_model(tok), tok, quads10, cfg, out_dir=tmp_path / "b")
    assert a.loss_curve == b.loss_curve
    assert [s for s, _ in a.loss_curve] == list(range(1, 13))
    assert all(math.isfinite(v) for _, v in a.loss_curve)
    final_a = tmp_path / "a" / "run-3" / "step-12" / "model.pt"
    assert a.final_checkpoint == str(final_a)
    assert final_a.read_bytes() == (tmp_path / "b" / "run-3" / "step-12" / "model.pt").read_bytes()
    _, c = train(_model(tok), tok, quads10, TrainConfig(learning_rate=3e-3, batch_size=4, max_steps=12, seed=4))
    assert c.loss_curve != a.loss_curve


def test_smoke_descent(quads10, tok):
    _, report = train(_model(tok), tok, quads10, TrainConfig(learning_rate=3e-3, batch_size=10, max_steps=101))
    assert report.loss_curve[100][1] < report.loss_curve[0][1]


def test_dev_evaluation_and_best_checkpoint(quads10, tok, tmp_path):
    tr, dev = quads10[:8], quads10[8:]
    cfg = TrainConfig(learning_rate=3e-3, batch_size=4, max_steps=6, eval_every=2)
    model, report = train(_model(tok), tok, tr, cfg, dev=dev, out_dir=tmp_path)
    assert [m["step"] for m in report.dev_metrics] == [2, 4, 6]
    best = min(report.dev_metrics, key=lambda m: m["dev_loss"])
    assert report.best_checkpoint.endswith(f"step-{best['step']}/model.pt")
    _, _, extra = load_checkpoint(report.best_checkpoint)
    assert extra["dev_loss"] == pytest.approx(best["dev_loss"])
    log = (tmp_path / "run-0" / "train_log.jsonl").read_text().splitlines()
    assert [json.loads(line)["step"] for line in log] == list(range(1, 7))


def test_non_finite_loss_aborts_with_step(quads10, tok):
    model = _model(tok)
    with torch.no_grad():
        model.embed.weight.fill_(float("nan"))
    with pytest.raises(NonFiniteLossError, match="step 0"):
        train(model, tok, quads10, TrainConfig(max_steps=3))
