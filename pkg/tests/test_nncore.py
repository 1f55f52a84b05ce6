"""Numeric core: loss, dropout, RMSProp, grad check, embeddings, checkpoints."""

import math

import numpy as np
import pytest

from depchain import (
    CheckpointError,
    EmbeddingError,
    EmbeddingTable,
    ParamSet,
    RmsProp,
    grad_check,
    load_checkpoint,
    load_embeddings,
    random_embeddings,
    save_checkpoint,
    softmax_xent,
    write_embeddings,
)
from depchain.models import gradcheck_model
from depchain.nncore import dropout, softmax

# independently computed at 40 digits: log(1 + e^-1 + e^-2)
XENT_123_GOLD2 = 0.4076059644443803
LN3 = 1.0986122886681098


class TestSoftmaxXent:
    def test_uniform(self):
        loss, prob, dlogits = softmax_xent(np.zeros(3), 0)
        assert abs(loss - LN3) < 1e-12
        assert np.allclose(prob, 1 / 3, atol=1e-12)
        assert np.allclose(dlogits, [1 / 3 - 1, 1 / 3, 1 / 3], atol=1e-12)

    def test_saturated(self):
        loss, _, _ = softmax_xent(np.array([10.0, -10.0, -10.0]), 0)
        assert loss < 1e-8

    def test_derived_value(self):
        loss, prob, _ = softmax_xent(np.array([1.0, 2.0, 3.0]), 2)
        assert abs(loss - XENT_123_GOLD2) < 1e-12
        assert abs(loss + math.log(prob[2])) < 1e-12

    def test_prob_sums_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            logits = rng.standard_normal(5) * 10
            _, prob, _ = softmax_xent(logits, 0)
            assert abs(prob.sum() - 1.0) < 1e-12
            assert ((prob > 0) & (prob < 1)).all()
            assert abs(softmax(logits).sum() - 1.0) < 1e-12

    def test_dlogits_matches_finite_difference(self):
        rng = np.random.default_rng(1)
        logits = rng.standard_normal(3)
        _, _, dlogits = softmax_xent(logits, 1)
        eps = 1e-6
        for j in range(3):
            bumped = logits.copy()
            bumped[j] += eps
            lp, _, _ = softmax_xent(bumped, 1)
            bumped[j] -= 2 * eps
            lm, _, _ = softmax_xent(bumped, 1)
            assert abs((lp - lm) / (2 * eps) - dlogits[j]) < 1e-8

    def test_large_logits_stable(self):
        loss, prob, _ = softmax_xent(np.array([1000.0, 999.0, 998.0]), 0)
        assert math.isfinite(loss)
        assert abs(prob.sum() - 1.0) < 1e-12

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            softmax_xent(np.array([1.0, float("nan"), 0.0]), 0)

    def test_gold_out_of_range(self):
        with pytest.raises(ValueError):
            softmax_xent(np.zeros(3), 3)


class TestRmsProp:
    def test_zero_gradient_fixed_point(self):
        p = ParamSet()
        p.add("w", np.array([1.0, -2.0, 3.0]))
        opt = RmsProp(p)
        opt.step()
        assert np.array_equal(p["w"], [1.0, -2.0, 3.0])

    def test_scalar_step_derived(self):
        p = ParamSet()
        p.add("w", np.array([1.0]))
        p.grads["w"][0] = 1.0
        opt = RmsProp(p, learning_rate=0.001, decay=0.9, epsilon=1e-8)
        opt.step()
        assert abs(opt.acc["w"][0] - 0.1) < 1e-15
        # independently computed: 1 - 0.001/(sqrt(0.1) + 1e-8)
        assert abs(p["w"][0] - 0.9968377224398316) < 1e-12

    def test_odd_symmetry(self):
        pa, pb = ParamSet(), ParamSet()
        pa.add("w", np.full(4, 2.0))
        pb.add("w", np.full(4, 2.0))
        g = np.array([0.5, -1.0, 2.0, -3.0])
        pa.grads["w"][...] = g
        pb.grads["w"][...] = -g
        RmsProp(pa).step()
        RmsProp(pb).step()
        assert np.allclose(pa["w"] - 2.0, -(pb["w"] - 2.0), atol=1e-15)

    def test_grads_zeroed_after_step(self):
        p = ParamSet()
        p.add("w", np.ones(3))
        p.grads["w"][...] = 5.0
        RmsProp(p).step()
        assert np.array_equal(p.grads["w"], np.zeros(3))

    def test_bitwise_deterministic(self):
        def run():
            p = ParamSet()
            p.add("w", np.linspace(-1, 1, 8))
            opt = RmsProp(p)
            for k in range(5):
                p.grads["w"][...] = np.sin(np.arange(8) + k)
                opt.step()
            return p["w"].tobytes()

        assert run() == run()

    def test_shape_mismatch_rejected(self):
        p = ParamSet()
        p.add("w", np.ones(3))
        opt = RmsProp(p)
        p.grads["w"] = np.ones(4)
        with pytest.raises(ValueError):
            opt.step()

    def test_bad_decay_rejected(self):
        with pytest.raises(ValueError):
            RmsProp(ParamSet(), decay=1.0)


class TestDropout:
    def test_ratio_zero_identity(self):
        x = np.arange(5.0)
        rng = np.random.default_rng(0)
        for mode in ("train", "eval"):
            y, mask = dropout(x, 0.0, mode, rng)
            assert np.array_equal(y, x)
            assert np.array_equal(mask, np.ones(5))

    def test_eval_identity(self):
        x = np.arange(5.0)
        y, _ = dropout(x, 0.5, "eval")
        assert np.array_equal(y, x)

    def test_train_mean_preserved(self):
        rng = np.random.default_rng(3)
        x = np.ones(10**6)
        y, _ = dropout(x, 0.5, "train", rng)
        assert abs(y.mean() - 1.0) < 0.01

    def test_mask_consistency(self):
        rng = np.random.default_rng(4)
        x = np.arange(1.0, 9.0)
        y, mask = dropout(x, 0.25, "train", rng)
        assert np.array_equal(y, x * mask)
        kept = mask > 0
        assert np.allclose(mask[kept], 1 / 0.75)

    def test_ratio_one_rejected(self):
        with pytest.raises(ValueError):
            dropout(np.ones(3), 1.0, "train", np.random.default_rng(0))

    def test_bad_mode_rejected(self):
        with pytest.raises(ValueError):
            dropout(np.ones(3), 0.5, "predict")

    def test_train_without_rng_rejected(self):
        with pytest.raises(ValueError):
            dropout(np.ones(3), 0.5, "train")


class TestGradCheck:
    def test_linear_softmax_toy(self):
        rng = np.random.default_rng(0)
        p = ParamSet()
        p.add("W", rng.standard_normal((4, 3)) * 0.3)
        p.add("b", rng.standard_normal(3) * 0.3)
        x = rng.standard_normal(4)

        def loss_fn():
            logits = x @ p["W"] + p["b"]
            loss, _, dlogits = softmax_xent(logits, 1)
            p.grads["W"] += np.outer(x, dlogits)
            p.grads["b"] += dlogits
            return loss

        assert grad_check(loss_fn, p) < 1e-6

    def test_flat_direction_guard(self):
        p = ParamSet()
        p.add("unused", np.zeros(4))

        def loss_fn():
            return 1.25  # constant: analytic and numeric both exactly zero

        assert grad_check(loss_fn, p) == 0.0

    def test_lstm_short_sequence(self):
        # short sequence, small model: every coordinate is probeable
        assert gradcheck_model("lstm", seed=0, dim=6, hidden=8, length=4) < 1e-4

    def test_wrong_gradient_detected(self):
        p = ParamSet()
        p.add("w", np.array([0.7]))

        def loss_fn():
            p.grads["w"][0] += 2 * p["w"][0] * 1.1  # deliberately off by 10%
            return float(p["w"][0] ** 2)

        assert grad_check(loss_fn, p) > 0.05

    def test_nonfinite_loss_rejected(self):
        p = ParamSet()
        p.add("w", np.ones(1))

        def loss_fn():
            return float("inf")

        with pytest.raises(ValueError):
            grad_check(loss_fn, p)


class TestParamSet:
    def test_duplicate_name_rejected(self):
        p = ParamSet()
        p.add("w", np.ones(2))
        with pytest.raises(ValueError):
            p.add("w", np.ones(2))

    def test_zero_and_scale(self):
        p = ParamSet()
        p.add("w", np.ones(3))
        p.grads["w"][...] = 4.0
        p.scale_grads(0.25)
        assert np.array_equal(p.grads["w"], np.ones(3))
        p.zero_grads()
        assert np.array_equal(p.grads["w"], np.zeros(3))

    def test_copy_is_deep(self):
        p = ParamSet()
        p.add("w", np.ones(3))
        q = p.copy()
        q["w"][0] = 9.0
        assert p["w"][0] == 1.0


EMB_FIXTURE = """3 4
cat 0.1 0.2 0.3 0.4
dog -1 0 1 2
Paris 9 8 7 6
"""


class TestEmbeddings:
    def test_known_word(self):
        t = load_embeddings(EMB_FIXTURE)
        assert t.dim == 4
        assert np.array_equal(t.lookup("cat"), [0.1, 0.2, 0.3, 0.4])

    def test_unknown_word_stable(self):
        t = load_embeddings(EMB_FIXTURE)
        a = t.lookup("zzzz")
        b = t.lookup("zzzz")
        assert np.array_equal(a, b)
        assert np.array_equal(a, t.unk)

    def test_lowercase_fallback(self):
        t = load_embeddings(EMB_FIXTURE)
        assert np.array_equal(t.lookup("CAT"), t.lookup("cat"))
        # exact match wins before lowercasing
        assert np.array_equal(t.lookup("Paris"), [9, 8, 7, 6])

    def test_row_count_mismatch_reports_line(self):
        bad = "2 4\ncat 0.1 0.2 0.3 0.4\ndog 1 2 3\n"
        with pytest.raises(EmbeddingError, match="line 3"):
            load_embeddings(bad)

    def test_malformed_header(self):
        with pytest.raises(EmbeddingError, match="header"):
            load_embeddings("banana\ncat 1 2\n")

    def test_vocab_count_mismatch(self):
        with pytest.raises(EmbeddingError, match="2 words"):
            load_embeddings("2 2\ncat 1 2\n")

    def test_duplicate_word_rejected(self):
        with pytest.raises(EmbeddingError, match="duplicate"):
            load_embeddings("2 2\ncat 1 2\ncat 3 4\n")

    def test_write_load_round_trip_exact(self):
        t = random_embeddings(["alpha", "beta", "gamma"], 5, seed=13)
        back = load_embeddings(write_embeddings(t))
        assert back.words == t.words
        assert np.array_equal(back.matrix, t.matrix)

    def test_random_embeddings_deterministic(self):
        a = random_embeddings(["x", "y"], 3, seed=2)
        b = random_embeddings(["x", "y"], 3, seed=2)
        c = random_embeddings(["x", "y"], 3, seed=3)
        assert np.array_equal(a.matrix, b.matrix)
        assert not np.array_equal(a.matrix, c.matrix)

    def test_embed_and_rows(self):
        t = load_embeddings(EMB_FIXTURE)
        X = t.embed(["cat", "zzzz"])
        assert X.shape == (2, 4)
        assert np.array_equal(X[1], t.unk)
        assert list(t.rows(["cat", "zzzz", "dog"])) == [0, -1, 1]


class TestCheckpoint:
    def _sample(self):
        p = ParamSet()
        rng = np.random.default_rng(5)
        p.add("W", rng.standard_normal((3, 4)))
        p.add("b", rng.standard_normal(4))
        t = random_embeddings(["uno", "dos"], 4, seed=1)
        return p, t

    def test_round_trip(self, tmp_path):
        p, t = self._sample()
        path = str(tmp_path / "m.ckpt")
        save_checkpoint(path, "lstm", p, t, {"hidden": 4, "seed": 0})
        model_type, p2, t2, config = load_checkpoint(path)
        assert model_type == "lstm"
        assert config == {"hidden": 4, "seed": 0}
        assert list(p2.values) == list(p.values)
        for name in p.values:
            assert np.array_equal(p2[name], p[name])
        assert t2.words == t.words
        assert np.array_equal(t2.matrix, t.matrix)
        assert np.array_equal(t2.unk, t.unk)

    def test_bitwise_identical_saves(self, tmp_path):
        p, t = self._sample()
        a, b = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
        save_checkpoint(a, "cnn", p, t, {"k": 1})
        save_checkpoint(b, "cnn", p, t, {"k": 1})
        assert (tmp_path / "a.ckpt").read_bytes() == (tmp_path / "b.ckpt").read_bytes()

    def test_truncated_payload_rejected(self, tmp_path):
        p, t = self._sample()
        path = tmp_path / "m.ckpt"
        save_checkpoint(str(path), "lstm", p, t, {})
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(str(path))

    def test_trailing_bytes_rejected(self, tmp_path):
        p, t = self._sample()
        path = tmp_path / "m.ckpt"
        save_checkpoint(str(path), "lstm", p, t, {})
        path.write_bytes(path.read_bytes() + b"\x00" * 8)
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(str(path))

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_bytes(b"not json\n\x00\x01")
        with pytest.raises(CheckpointError):
            load_checkpoint(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            load_checkpoint(str(tmp_path / "nope.ckpt"))


class TestEmbeddingTableValidation:
    def test_shape_mismatch(self):
        with pytest.raises(EmbeddingError):
            EmbeddingTable(["a"], np.zeros((2, 3)), np.zeros(3))

    def test_unk_dim_mismatch(self):
        with pytest.raises(EmbeddingError):
            EmbeddingTable(["a"], np.zeros((1, 3)), np.zeros(4))
