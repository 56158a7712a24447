"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from adose.corpus import SynthSpec, generate
from adose.mefn import MefnConfig, ModelState


def fd_gradients(loss_fn, params, h=1e-4):
    """Central finite differences of a scalar loss over every parameter entry.

    ``loss_fn`` must recompute the loss from the current parameter values;
    parameters are restored after probing.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p.data)
        it = np.nditer(p.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p.data[idx]
            p.data[idx] = orig + h
            lp = loss_fn()
            p.data[idx] = orig - h
            lm = loss_fn()
            p.data[idx] = orig
            g[idx] = (lp - lm) / (2 * h)
        grads.append(g)
    return grads


def max_rel_error(analytic, numeric, floor=1e-6):
    """Worst-case relative disagreement between two gradient lists."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


@pytest.fixture
def tiny_state():
    """A float64 model small enough for exhaustive finite differences."""
    cfg = MefnConfig(text_dim=5, visual_dim=4, n_domains=3, embed_dim=6, hidden_dim=4)
    return ModelState.initialize(cfg, seed=11, dtype=np.float64)


@pytest.fixture
def tiny_batch():
    """Four samples: three labeled (two real, one fake) plus one unlabeled."""
    rng = np.random.default_rng(5)
    texts = rng.normal(size=(4, 5))
    visuals = rng.normal(size=(4, 4))
    labels = np.array([0, 1, 0, -1])
    domains = np.array([0, 1, 0, 2])
    hv = rng.dirichlet(np.ones(3), size=4)
    return texts, visuals, labels, domains, hv


@pytest.fixture(scope="session")
def small_dataset():
    spec = SynthSpec(samples_per_domain=[40, 40, 40, 80], text_dim=8, visual_dim=8)
    return generate(spec, seed=21)


def make_small_state(ds, seed=13, embed_dim=16, hidden_dim=8, dtype=np.float32):
    cfg = MefnConfig(
        text_dim=ds.dims.text,
        visual_dim=ds.dims.visual,
        n_domains=ds.n_domains,
        embed_dim=embed_dim,
        hidden_dim=hidden_dim,
    )
    return ModelState.initialize(cfg, seed=seed, dtype=dtype)


def make_linear_boundary_state(direction):
    """A model whose three experts all realize one exact linear boundary.

    Encoders and alignment heads are identity maps on 2-D inputs. Each
    two-layer relu classifier computes logits (z, -z) with
    z = direction . input, using relu(z) - relu(-z) = z.
    """
    from adose.diffcore import DenseNet, Layer, Tensor

    a, b = direction

    def layer(w, bias, act):
        return Layer(
            Tensor(np.array(w, dtype=np.float64), requires_grad=True),
            Tensor(np.array(bias, dtype=np.float64), requires_grad=True),
            act,
        )

    def identity2():
        return DenseNet([layer(np.eye(2), np.zeros(2), "identity")])

    def linear_classifier(scale=1.0):
        return DenseNet(
            [
                layer([[a * scale, b * scale], [-a * scale, -b * scale]], [0.0, 0.0], "relu"),
                layer([[1.0, -1.0], [-1.0, 1.0]], [0.0, 0.0], "identity"),
            ]
        )

    cross = DenseNet(
        [
            layer(
                [[a / 2, b / 2, a / 2, b / 2], [-a / 2, -b / 2, -a / 2, -b / 2]],
                [0.0, 0.0],
                "relu",
            ),
            layer([[1.0, -1.0], [-1.0, 1.0]], [0.0, 0.0], "identity"),
        ]
    )
    rng = np.random.default_rng(0)
    cfg = MefnConfig(text_dim=2, visual_dim=2, n_domains=2, embed_dim=2, hidden_dim=2)
    from adose.diffcore import DenseNet as DN

    nets = {
        "enc_t": identity2(),
        "enc_v": identity2(),
        "align_t": identity2(),
        "align_v": identity2(),
        "disc_t": DN.build([2, 2, 2], None, rng, np.float64),
        "disc_v": DN.build([2, 2, 2], None, rng, np.float64),
        "cls_t": linear_classifier(),
        "cls_v": linear_classifier(),
        "cls_c": cross,
    }
    return ModelState(cfg, nets, seed=0)
