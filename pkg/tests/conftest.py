import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from toycorpus import (  # noqa: E402
    OVERFIT_VOCAB,
    make_embeddings,
    overfit_corpus,
)

# test_acceptance appends one line per behavioral gate; echoed after the
# run so the verdicts are visible without -s.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

from finet.trainer import TrainConfig, save_checkpoint, train  # noqa: E402


def write_corpus(path, instances):
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps({
                "tokens": list(inst.tokens),
                "mention_start": inst.mention_start,
                "mention_end": inst.mention_end,
                "labels": sorted(inst.labels),
            }) + "\n")


def write_embedding_file(path, emb):
    with open(path, "w", encoding="utf-8") as fh:
        for tok in emb.vocabulary():
            vec = emb.lookup(tok)
            fh.write(tok + " " + " ".join(repr(float(x)) for x in vec) + "\n")


@pytest.fixture(scope="session")
def overfit_embeddings():
    return make_embeddings(OVERFIT_VOCAB, dim=10, seed=100)


@pytest.fixture(scope="session")
def overfit_instances():
    return overfit_corpus(seed=0, n=200)


@pytest.fixture(scope="session")
def overfit_config():
    return TrainConfig(
        encoder="attentive", max_passes=30, ctx_size=4, mention_size=2,
        dim_hidden=10, dim_att=5, alpha=0.005, batch_size=32,
        dropout_p=0.5, eval_every=10, seed=5,
    )


@pytest.fixture(scope="session")
def trained_attentive(overfit_config, overfit_instances, overfit_embeddings):
    """One small attentive model shared by checkpoint and CLI tests."""
    return train(overfit_config, overfit_instances, overfit_instances,
                 overfit_embeddings)


@pytest.fixture(scope="session")
def cli_workspace(tmp_path_factory, overfit_instances, overfit_embeddings,
                  trained_attentive):
    """Corpus, embedding, and checkpoint files for driving the CLI."""
    root = tmp_path_factory.mktemp("cli")
    write_corpus(root / "train.jsonl", overfit_instances[:150])
    write_corpus(root / "dev.jsonl", overfit_instances[150:])
    write_embedding_file(root / "vectors.txt", overfit_embeddings)
    save_checkpoint(trained_attentive.checkpoint, root / "model.finet")
    return root
