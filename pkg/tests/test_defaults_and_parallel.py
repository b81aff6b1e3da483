import numpy as np
import pytest

from dpmne.evaluation import EvalProtocol, pdr_sweep
from dpmne.graph_model import SynthConfig, synth_generate
from dpmne.parallel import map_views, worker_count
from dpmne.proximity import ProximityConfig, default_weights
from dpmne.trainer import Hyperparams, train


class TestShippedDefaults:
    def test_embedding_dimension_and_iteration_budget(self):
        hyper = Hyperparams()
        assert hyper.dim == 128
        assert hyper.max_iters == 60
        assert hyper.hidden_dims == (200,)

    def test_proximity_order_and_halving_weights(self):
        cfg = ProximityConfig()
        assert cfg.order == 5
        assert cfg.resolved_weights() == (1.0, 0.5, 0.25, 0.125, 0.0625)
        assert default_weights(3) == (1.0, 0.5, 0.25)

    def test_evaluation_protocol_split_and_repeats(self):
        protocol = EvalProtocol()
        assert protocol.train_fraction == 0.5
        assert protocol.repeats == 10
        assert protocol.l2 == 1.0


class TestThreadCap:
    def test_zero_or_unset_means_auto(self, monkeypatch):
        monkeypatch.delenv("DPMNE_THREADS", raising=False)
        assert 1 <= worker_count(4) <= 4
        monkeypatch.setenv("DPMNE_THREADS", "0")
        assert 1 <= worker_count(4) <= 4

    def test_cap_applies_and_never_exceeds_tasks(self, monkeypatch):
        monkeypatch.setenv("DPMNE_THREADS", "2")
        assert worker_count(8) == 2
        assert worker_count(1) == 1

    def test_invalid_values_rejected(self, monkeypatch):
        monkeypatch.setenv("DPMNE_THREADS", "lots")
        with pytest.raises(ValueError):
            worker_count(3)
        monkeypatch.setenv("DPMNE_THREADS", "-1")
        with pytest.raises(ValueError):
            worker_count(3)

    def test_map_views_preserves_order(self, monkeypatch):
        monkeypatch.setenv("DPMNE_THREADS", "3")
        assert map_views(lambda x: x * x, range(7)) == [x * x for x in range(7)]

    def test_training_result_is_thread_count_independent(self, monkeypatch):
        net = synth_generate(SynthConfig(n=30, communities=3, t=3, pdr=0.2,
                                         feature_dim=6, seed=21))
        hyper = Hyperparams(dim=4, max_iters=3, hidden_dims=(5,), seed=21,
                            proximity=ProximityConfig(order=2, weights=(1.0, 0.5)))
        monkeypatch.setenv("DPMNE_THREADS", "1")
        serial = train(net, hyper)
        monkeypatch.setenv("DPMNE_THREADS", "3")
        threaded = train(net, hyper)
        assert np.array_equal(serial.Y, threaded.Y)
        assert serial.objective_trace == threaded.objective_trace


def test_sweep_neighbor_fill_method_runs():
    net = synth_generate(SynthConfig(n=30, communities=2, t=2, feature_dim=5, seed=22))
    hyper = Hyperparams(dim=3, max_iters=2, hidden_dims=(4,),
                        proximity=ProximityConfig(order=2, weights=(1.0, 0.5)))
    rows = pdr_sweep(net, [0.2], ("knn-fill",), EvalProtocol(repeats=2, seed=1), hyper)
    assert len(rows) == 1
    assert rows[0].method == "knn-fill"
    assert 0.0 <= rows[0].report.micro_f1 <= 1.0
