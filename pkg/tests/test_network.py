import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import soft_argmax_oracle
from spt_rgbd.core import BoundingBox
from spt_rgbd.network import NetConfig
from spt_rgbd.network.backbone import TinyBackbone, extract_features, normalize_depth
from spt_rgbd.network.checkpoint import CheckpointError, load_checkpoint, read_meta, save_checkpoint
from spt_rgbd.network.config import ConfigError
from spt_rgbd.network.fusion import FusionModule
from spt_rgbd.network.head import (
    CornerHead,
    grid_to_unit,
    soft_argmax,
    spatial_softmax,
    unit_to_grid,
)
from spt_rgbd.network.loss import box_loss, box_loss_tensor
from spt_rgbd.network.model import SPT
from spt_rgbd.network.train import Batch, make_optimizer, training_step
from spt_rgbd.network.transformer import Encoder, QueryDecoder

VARIANTS = ("A", "B", "C", "D")


def random_inputs(cfg, batch=2, seed=0):
    g = torch.Generator().manual_seed(seed)
    t, s = cfg.template_size, cfg.search_size
    return (
        torch.rand(batch, 3, t, t, generator=g) * 255,
        500 + torch.rand(batch, 1, t, t, generator=g) * 3000,
        torch.rand(batch, 3, s, s, generator=g) * 255,
        500 + torch.rand(batch, 1, s, s, generator=g) * 3000,
    )


@pytest.fixture(scope="module")
def toy():
    torch.manual_seed(0)
    return SPT(NetConfig.toy(8)).eval()


def test_backbone_grid_shapes():
    bb = TinyBackbone(8).eval()
    assert extract_features(bb, torch.zeros(1, 3, 128, 128), 8).shape == (1, 8, 8, 8)
    assert extract_features(bb, torch.zeros(1, 3, 64, 64), 8).shape == (1, 8, 4, 4)
    with pytest.raises(ValueError, match="stride"):
        extract_features(bb, torch.zeros(1, 3, 60, 64), 8)


def test_depth_normalization_range():
    d = torch.tensor([[[[1000.0, 2000.0], [0.0, 4000.0]]]])
    out = normalize_depth(d)
    assert out.shape == (1, 3, 2, 2)
    assert out.min() == 0 and out.max() == 1


def test_config_validation():
    cfg = NetConfig.toy(8)
    assert (cfg.template_grid, cfg.search_grid) == (4, 8)
    assert cfg.template_tokens + cfg.search_tokens == 80
    with pytest.raises(ConfigError):
        NetConfig.toy(6)  # sine embedding needs C % 4 == 0
    with pytest.raises(ConfigError):
        NetConfig.toy(8, search_size=120)
    assert NetConfig.from_dict(cfg.to_dict()) == cfg
    full = NetConfig.full()
    assert (full.encoder_layers, full.fusion_layers, full.decoder_layers) == (6, 2, 6)


@pytest.mark.parametrize("variant", VARIANTS)
def test_forward_shapes(toy, variant):
    with torch.no_grad():
        out = toy(*random_inputs(toy.cfg), variant=variant)
    assert out["fused"].shape == (2, 80, 8)
    assert out["query"].shape == (2, 1, 8)
    assert out["p_tl"].shape == out["p_br"].shape == (2, 8, 8)
    for k in ("p_tl", "p_br"):
        assert torch.allclose(out[k].sum(dim=(1, 2)), torch.ones(2), atol=1e-6)


@settings(max_examples=8, deadline=None)
@given(st.sampled_from([4, 8, 12]), st.sampled_from([(32, 64), (64, 96), (48, 128)]), st.sampled_from(VARIANTS))
def test_shape_contract_across_configs(channels, sizes, variant):
    cfg = NetConfig.toy(channels, template_size=sizes[0], search_size=sizes[1])
    model = SPT(cfg).eval()
    with torch.no_grad():
        out = model(*random_inputs(cfg, batch=1), variant=variant)
    assert out["fused"].shape == (1, cfg.template_tokens + cfg.search_tokens, channels)
    assert out["p_tl"].shape == (1, cfg.search_grid, cfg.search_grid)
    assert abs(float(out["p_br"].sum()) - 1) < 1e-6


def test_heatmaps_normalized_in_train_mode():
    model = SPT(NetConfig.toy(8)).train()
    out = model(*random_inputs(model.cfg, batch=3))
    for k in ("p_tl", "p_br"):
        assert torch.allclose(out[k].sum(dim=(1, 2)), torch.ones(3), atol=1e-6)


def test_deterministic(toy):
    x = random_inputs(toy.cfg)
    with torch.no_grad():
        a, b = toy(*x), toy(*x)
    assert torch.equal(a["p_tl"], b["p_tl"]) and torch.equal(a["box"], b["box"])
    assert all(torch.equal(p, q) for p, q in zip(SPT(toy.cfg).parameters(), toy.parameters()))


def test_fusion_variant_identities():
    torch.manual_seed(1)
    fusion = FusionModule(8, 2, 2, 16).eval()
    rgb, depth = torch.randn(2, 80, 8), torch.randn(2, 80, 8)
    with torch.no_grad():
        a, b, c, d = (fusion(rgb, depth, v) for v in VARIANTS)
    assert torch.equal(c, a + rgb)
    assert torch.equal(d, b + rgb)
    assert a.shape == b.shape == c.shape == d.shape == (2, 80, 8)


def test_fusion_identity_projection_passes_rgb():
    fusion = FusionModule(8, 1, 1, 16)
    with torch.no_grad():
        fusion.proj.weight.zero_()
        fusion.proj.weight[:, :8, 0] = torch.eye(8)
        fusion.proj.bias.zero_()
        rgb, depth = torch.randn(3, 10, 8), torch.randn(3, 10, 8)
        assert torch.allclose(fusion(rgb, depth, "A"), rgb, atol=1e-7, rtol=0)


def _permutation_error(model, tokens, perm):
    with torch.no_grad():
        return (model.encode_tokens(tokens[:, perm]) - model.encode_tokens(tokens)[:, perm]).abs().max().item()


def test_permutation_equivariance():
    torch.manual_seed(2)
    cfg = NetConfig.toy(8, positional=False)
    model = SPT(cfg).eval()
    tokens = torch.randn(1, 80, 8)
    perm = torch.randperm(80)
    assert _permutation_error(model.encoder_rgb, tokens, perm) < 1e-5
    with torch.no_grad():
        fused = model.fusion(tokens, torch.randn(1, 80, 8), "D")
        enc = model.fusion.encoder
        assert (enc(fused[:, perm]) - enc(fused)[:, perm]).abs().max() < 1e-5

    model_pos = SPT(cfg.replace(positional=True)).eval()
    assert _permutation_error(model_pos.encoder_rgb, tokens, perm) > 1e-3


def test_decoder_on_identical_tokens():
    torch.manual_seed(3)
    dec = QueryDecoder(2, 8, 2, 16).double().eval()
    token = torch.randn(1, 1, 8, dtype=torch.float64)
    with torch.no_grad():
        many = dec(token.expand(1, 37, 8))
        one = dec(token)
    assert many.shape == (1, 1, 8)
    assert torch.allclose(many, one, atol=1e-12, rtol=0)


def test_head_ignores_template_block(toy):
    x = random_inputs(toy.cfg, batch=1)
    with torch.no_grad():
        out = toy(*x)
        fused = out["fused"].clone()
        fused[:, : toy.cfg.template_tokens] = torch.randn(1, toy.cfg.template_tokens, 8)
        p_tl, p_br = toy.predict_heatmaps(out["query"], fused)
    assert torch.equal(p_tl, out["p_tl"]) and torch.equal(p_br, out["p_br"])


def test_head_zero_similarity():
    head = CornerHead(8, 8, 4).eval()
    with torch.no_grad():
        p_tl, p_br = head(torch.zeros(1, 1, 8), torch.randn(1, 16, 8))
        assert torch.equal(head.enhance(torch.zeros(1, 1, 8), torch.randn(1, 16, 8)), torch.zeros(1, 16, 8))
    assert abs(float(p_tl.sum()) - 1) < 1e-6 and abs(float(p_br.sum()) - 1) < 1e-6
    # zero input: every cell sees the same bias path
    assert torch.allclose(p_tl, torch.full_like(p_tl, 1 / 16))


def test_soft_argmax_examples():
    ex, ey = soft_argmax(torch.full((1, 4, 4), 1 / 16, dtype=torch.float64))
    assert (ex.item(), ey.item()) == (1.5, 1.5)
    onehot = torch.zeros(1, 4, 4, dtype=torch.float64)
    onehot[0, 3, 2] = 1  # row y=3, column x=2
    ex, ey = soft_argmax(onehot)
    assert (ex.item(), ey.item()) == (2.0, 3.0)


@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**31 - 1))
def test_soft_argmax_matches_double_loop(h, w, seed):
    g = torch.Generator().manual_seed(seed)
    prob = spatial_softmax(torch.randn(1, h, w, generator=g, dtype=torch.float64) * 3)
    ex, ey = soft_argmax(prob)
    ox, oy = soft_argmax_oracle(prob[0].tolist())
    assert abs(ex.item() - ox) <= 1e-9 and abs(ey.item() - oy) <= 1e-9
    assert 0 <= ex.item() <= w - 1 and 0 <= ey.item() <= h - 1


@given(st.floats(-0.5, 7.5))
def test_grid_unit_roundtrip(v):
    t = torch.tensor([v], dtype=torch.float64)
    assert abs(unit_to_grid(grid_to_unit(t, 8), 8).item() - v) <= 1e-12


def test_box_loss_examples():
    assert box_loss(BoundingBox(0, 0, 2, 2), BoundingBox(0, 0, 2, 2)) == 0.0
    pred, gt = BoundingBox(0, 0, 0.2, 0.2), BoundingBox(0.1, 0, 0.2, 0.2)
    assert box_loss(pred, gt) == pytest.approx(2 * (2 / 3) + 5 * 0.025, abs=1e-12)
    assert box_loss(pred, gt) == pytest.approx(1.4583333333333333, abs=1e-12)


boxes01 = st.builds(BoundingBox, st.floats(0, 0.8), st.floats(0, 0.8), st.floats(0.05, 0.5), st.floats(0.05, 0.5))


@given(boxes01, boxes01, st.floats(0.1, 5), st.floats(0.1, 5))
def test_box_loss_linear_in_weights(p, g, a, b):
    single = box_loss(p, g, a, b)
    assert single >= 0
    assert box_loss(p, g, 2 * a, 2 * b) == pytest.approx(2 * single, rel=1e-12, abs=1e-15)


def test_giou_switch():
    p = torch.tensor([[0.0, 0.0, 0.2, 0.2]], dtype=torch.float64)
    g = torch.tensor([[0.5, 0.5, 0.2, 0.2]], dtype=torch.float64)
    plain = box_loss_tensor(p, g, 1.0, 0.0)
    gen = box_loss_tensor(p, g, 1.0, 0.0, generalized=True)
    assert plain.item() == 1.0 and gen.item() > 1.0


def _batch(cfg, n=2):
    x = random_inputs(cfg, batch=n)
    return Batch(*x, torch.tensor([[0.3, 0.3, 0.4, 0.4]] * n))


def test_training_step_zero_lr():
    model = SPT(NetConfig.toy(8))
    before = {k: v.clone() for k, v in model.state_dict().items()}
    loss = training_step(model, make_optimizer(model, lr=0.0), _batch(model.cfg))
    assert np.isfinite(loss) and loss >= 0
    after = model.state_dict()
    for k, v in before.items():
        if "running" in k or "num_batches" in k:
            continue  # head BN statistics move in train mode regardless of lr
        assert torch.equal(v, after[k]), k


def test_training_step_changes_parameters():
    model = SPT(NetConfig.toy(8))
    before = [p.clone() for p in model.parameters()]
    training_step(model, make_optimizer(model), _batch(model.cfg))
    assert any(not torch.equal(a, b) for a, b in zip(before, model.parameters()))


def test_checkpoint_roundtrip(tmp_path, toy):
    path = tmp_path / "toy.npz"
    save_checkpoint(toy, path, extra={"note": "x"})
    meta = read_meta(path)
    assert meta["version"] == 1 and meta["extra"] == {"note": "x"}
    loaded = load_checkpoint(path).eval()
    x = random_inputs(toy.cfg, batch=1)
    with torch.no_grad():
        assert torch.equal(loaded(*x)["box"], toy(*x)["box"])


def test_checkpoint_rejects_shape_mismatch(tmp_path, toy):
    path = tmp_path / "toy.npz"
    save_checkpoint(toy, path)
    with pytest.raises(CheckpointError, match="shape"):
        load_checkpoint(path, SPT(NetConfig.toy(16)))
    (tmp_path / "junk.npz").write_bytes(b"not a checkpoint")
    with pytest.raises(Exception):
        load_checkpoint(tmp_path / "junk.npz")


@pytest.mark.slow
def test_full_profile_forward():
    cfg = NetConfig.full()
    model = SPT(cfg).eval()
    with torch.no_grad():
        out = model(*random_inputs(cfg, batch=1))
    grid = cfg.search_size // 16
    assert out["fused"].shape == (1, cfg.template_tokens + cfg.search_tokens, 256)
    assert out["p_tl"].shape == (1, grid, grid)
    assert torch.allclose(out["p_br"].sum(), torch.tensor(1.0), atol=1e-6)
