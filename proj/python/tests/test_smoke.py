import math

import numpy as np
import pytest

import morpher


def test_graph_roundtrip_and_errors():
    g = morpher.Graph(3, [(1, 0), (1, 2)], np.eye(3))
    assert g.num_nodes == 3
    assert g.edges == [(0, 1), (1, 2)]
    assert np.array_equal(g.features, np.eye(3))
    with pytest.raises(morpher.GraphError):
        morpher.Graph(2, [(0, 0)], np.zeros((2, 1)))
    with pytest.raises(morpher.Error):
        morpher.Graph(2, [(0, 5)], np.zeros((2, 1)))


def test_improved_prompt_respects_cap():
    g = morpher.Graph(4, [(0, 1), (1, 2), (2, 3)], np.ones((4, 2)))
    prompt = morpher.init_graph_prompt(6, 2, seed=1)
    p = morpher.build_prompted(g, prompt, morpher.PromptStyle.improved)
    assert p.cross_edge_count <= max(4, 3)
    assert p.features.shape == (10, 2)


def test_contrastive_anchors():
    e = np.array([1.0, 0.0])
    assert morpher.contrastive_loss([e, e], [e, e], 0.07) == pytest.approx(math.log(2), abs=1e-12)
    assert morpher.contrastive_loss([e, -e], [e, -e], 1.0) == pytest.approx(math.log1p(math.exp(-2)), abs=1e-12)


def test_few_shot_training_and_prediction(tmp_path):
    full = morpher.generate_separable_dataset(40, 8, 4, 2, seed=0)
    bundle = morpher.few_shot_split(full, 10, seed=0)
    gnn = morpher.init_gnn_random(4, 64, 32, seed=100)
    store = morpher.build_pseudo_store(bundle.label_texts, 64, seed=5)
    config = morpher.TrainConfig()
    config.epochs = 60
    result = morpher.train_morpher(bundle, gnn, store, config)
    assert len(result.history.epochs) == 60

    test = [bundle.graphs[i] for i in bundle.splits.test]
    golds = [bundle.labels[i] for i in bundle.splits.test]
    preds = morpher.predict(test, result.state, gnn, store, bundle.label_texts)
    report = morpher.metrics(preds, golds, 2)
    assert report.accuracy >= 0.9
    assert sum(map(sum, report.confusion)) == len(golds)

    path = tmp_path / "state.mpst"
    morpher.save_prompt_state(result.state, path)
    back = morpher.load_prompt_state(path)
    assert np.array_equal(back.proj_weight, result.state.proj_weight)
    assert morpher.count_trainable(back) == 10 * 4 + 4 * 64 + 64 * 32 + 64


def test_token_embeddings_file(tmp_path):
    store = morpher.TextEmbeddingStore([("cat", np.ones((2, 3))), ("big dog", np.zeros((1, 3)))])
    morpher.save_token_embeddings(store, tmp_path / "e.mteb")
    back = morpher.load_token_embeddings(tmp_path / "e.mteb")
    assert back.labels == ["cat", "big dog"]
    assert "cat" in back and len(back) == 2
    assert np.array_equal(back.tokens("cat"), np.ones((2, 3)))
    (tmp_path / "bad.mteb").write_bytes(b"XXXX")
    with pytest.raises(morpher.FormatError):
        morpher.load_token_embeddings(tmp_path / "bad.mteb")


def test_gradcheck_and_config():
    cfg = morpher.GradcheckConfig()
    cfg.instances = 2
    assert morpher.run_gradcheck(cfg, 7).passed()
    with pytest.raises(morpher.ConfigError):
        morpher.parse_run_config("seed = 1\nbogus = 2\n")
    run = morpher.parse_run_config("seed = 4\n[train]\nepochs = 3\n")
    assert run.train.epochs == 3
    assert '"seed": 4' in morpher.manifest_json(run)


def test_silhouette():
    x = [np.array([0.0]), np.array([0.1]), np.array([10.0]), np.array([10.1])]
    assert morpher.silhouette(x, [0, 0, 1, 1]) > 0.9
