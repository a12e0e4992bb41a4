import numpy as np
import pytest

from crsim._rng import derive_rng
from crsim.channel import (apply_receive_beamforming, check_orthonormal, cscg, draw_channels,
                           draw_pr_block, receive, ReceivedBlock)
from crsim.learning import sample_covariance, subspace_decompose, true_covariance


def test_shapes(cfg, rng):
    ch = draw_channels(cfg, rng)
    assert ch.g1.shape == (4, 2) and ch.g2.shape == (4, 2) and ch.h.shape == (4, 4)


def test_same_seed_same_channels(cfg):
    a = draw_channels(cfg, derive_rng(7, 0))
    b = draw_channels(cfg, derive_rng(7, 0))
    for x, y in zip((a.g1, a.g2, a.h), (b.g1, b.g2, b.h)):
        assert np.array_equal(x, y)


def test_different_keys_give_different_streams():
    assert not np.array_equal(derive_rng(7, 1, 0).random(4), derive_rng(7, 1, 1).random(4))


def test_cscg_unit_variance_split(rng):
    z = cscg(rng, 200_000)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.02)
    assert np.var(z.real) == pytest.approx(0.5, abs=0.01)
    assert np.var(z.imag) == pytest.approx(0.5, abs=0.01)


def test_entry_power_over_many_draws(cfg, rng):
    draws = np.concatenate([draw_channels(cfg, rng).h.ravel() for _ in range(7000)])
    assert draws.size > 1e5
    assert np.mean(np.abs(draws) ** 2) == pytest.approx(1.0, abs=0.02)


def test_pr_block_alpha_one_all_active(cfg, rng):
    blk = draw_pr_block(cfg, 500, rng, alpha=1.0)
    assert blk.activity.all()
    assert np.all(np.abs(blk.symbols) > 0)


def test_pr_block_statistics(cfg, rng):
    blk = draw_pr_block(cfg, 100_000, rng)
    assert blk.activity.mean() == pytest.approx(0.5, abs=0.01)
    assert np.all(blk.symbols[:, ~blk.activity] == 0)
    s = blk.symbols
    r = s @ s.conj().T / s.shape[1]
    target = cfg.alpha * cfg.sigma_s2 * np.eye(cfg.mp)
    assert np.linalg.norm(r - target) / np.linalg.norm(target) < 0.02
    act = s[:, blk.activity]
    r_act = act @ act.conj().T / act.shape[1]
    assert np.linalg.norm(r_act - cfg.sigma_s2 * np.eye(cfg.mp)) / (cfg.sigma_s2 * np.sqrt(2)) < 0.02


def test_pr_block_rejects_empty(cfg, rng):
    with pytest.raises(ValueError):
        draw_pr_block(cfg, 0, rng)


def test_receive_zero_channel_zero_noise(cfg, rng):
    blk = draw_pr_block(cfg, 10, rng)
    assert np.all(receive(np.zeros((4, 2)), blk, 0.0, rng).samples == 0)


def test_receive_noiseless_identity(cfg, rng):
    g = cscg(rng, (4, 2))
    blk = draw_pr_block(cfg, 20, rng, alpha=1.0)
    assert np.array_equal(receive(g, blk, 0.0, rng).samples, g @ blk.symbols)


def test_receive_shape_error(cfg, rng):
    blk = draw_pr_block(cfg, 5, rng)
    with pytest.raises(ValueError, match="incompatible"):
        receive(np.zeros((4, 3)), blk, 1.0, rng)


def test_received_covariance(cfg, rng):
    g = draw_channels(cfg, rng).g1
    blk = draw_pr_block(cfg, 100_000, rng)
    r_hat = sample_covariance(receive(g, blk, cfg.sigma_n1_2, rng)).r_hat
    r = true_covariance(g, cfg.alpha, cfg.sigma_s2, cfg.sigma_n1_2)
    assert np.linalg.norm(r_hat - r) / np.linalg.norm(r) < 0.02


def test_covariance_error_decays_like_inverse_sqrt(cfg):
    g = draw_channels(cfg, derive_rng(3, 0)).g1
    r = true_covariance(g, cfg.alpha, cfg.sigma_s2, cfg.sigma_n1_2)
    lengths = np.array([100, 1000, 10_000])
    errs = []
    for i, n in enumerate(lengths):
        e = []
        for t in range(60):
            rng = derive_rng(3, 1, i, t)
            y = receive(g, draw_pr_block(cfg, int(n), rng), cfg.sigma_n1_2, rng)
            e.append(np.linalg.norm(sample_covariance(y).r_hat - r))
        errs.append(np.mean(e))
    slope = np.polyfit(np.log(lengths), np.log(errs), 1)[0]
    assert abs(slope + 0.5) < 0.15


def test_beamforming_selects_rows(rng):
    y = cscg(rng, (4, 7))
    out = apply_receive_beamforming(np.eye(4)[:, :2], ReceivedBlock(y))
    assert np.array_equal(out.samples, y[:2])


def test_beamforming_nulls_pr_with_exact_subspace(cfg, rng):
    g = cscg(rng, (4, 2))
    u = subspace_decompose(true_covariance(g, 0.5, 100.0, 1.0), 2).u_hat
    blk = draw_pr_block(cfg, 50, rng, alpha=1.0)
    out = apply_receive_beamforming(u, receive(g, blk, 0.0, rng))
    assert np.max(np.abs(out.samples)) < 1e-10 * np.max(np.abs(blk.symbols))


def test_beamformed_noise_stays_white(rng):
    q, _ = np.linalg.qr(cscg(rng, (4, 4)))
    u = q[:, :2]
    z = cscg(rng, (4, 100_000), 2.0)
    w = apply_receive_beamforming(u, ReceivedBlock(z)).samples
    r = w @ w.conj().T / w.shape[1]
    assert np.linalg.norm(r - 2.0 * np.eye(2)) / np.linalg.norm(2.0 * np.eye(2)) < 0.02


def test_beamforming_rejects_non_orthonormal(rng):
    with pytest.raises(ValueError, match="orthonormal"):
        apply_receive_beamforming(2 * np.eye(4)[:, :2], ReceivedBlock(cscg(rng, (4, 3))))
    with pytest.raises(ValueError):
        check_orthonormal(np.ones((4, 2)))
