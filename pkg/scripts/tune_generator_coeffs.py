"""Hill-climb the synthetic generating coefficients.

Maximizes the fraction of category-classified playouts on which the
candidate vector is decisive (per-event squared loss <= 0.045) while the
decisive subset stays label-balanced, then validates on a fresh pool.
Writes the winners to stdout for freezing into socialgame.synth.
"""

import json
import logging
import sys

import numpy as np

logging.disable(logging.WARNING)

from socialgame.events import LabeledEvent, categorize_event
from socialgame.expert import precompute_features, proceed_prob_matrix
from socialgame.game import PayoffParams
from socialgame.orientation import OrientationConfig, TendencyCategory
from socialgame.synth import SynthConfig, _playout


def build_pool(n, category, seed, params, ocfg, cfg):
    rng = np.random.default_rng(seed)
    pool = []
    tries = 0
    while len(pool) < n and tries < n * 400:
        tries += 1
        t, d_l, v_l, d_s, v_s = _playout(rng, category, params, cfg)
        try:
            ev = LabeledEvent(
                event_id="pool", t=t, d_l=d_l, v_l=v_l, d_s=d_s, v_s=v_s,
                label_l=1, label_s=0, category=category,
            )
        except Exception:
            continue
        if ev.decision_frames() < cfg.min_decision_frames:
            continue
        if categorize_event(ev, ocfg) is not category:
            continue
        pool.append(ev)
    return pool


# Target share of left-first labels among decisive events, per category.
# Matches the tendency semantics: a pressing straight driver mostly goes
# first, a yielding one mostly concedes.
TARGET_SHARE = {
    "precedence": 0.30,
    "ambiguous": 0.50,
    "yielding": 0.70,
}


def score_candidates(cands, feats, target_share, chunk=128):
    cands = np.atleast_2d(cands)
    parts = []
    for base in range(0, len(cands), chunk):
        p_l, p_s = proceed_prob_matrix(cands[base : base + chunk], feats)
        parts.append((p_l, p_s))
    p_l = np.concatenate([p[0] for p in parts])
    p_s = np.concatenate([p[1] for p in parts])
    pred = p_l > p_s
    loss = np.where(pred, (1 - p_l) ** 2 + p_s ** 2, p_l ** 2 + (1 - p_s) ** 2)
    dec = loss <= 0.045
    n_dec = dec.sum(axis=1)
    share = np.where(n_dec > 0, (pred & dec).sum(axis=1) / np.maximum(n_dec, 1), 0.0)
    share_fit = np.clip(1.0 - np.abs(share - target_share) / 0.2, 0.0, 1.0)
    score = (n_dec / dec.shape[1]) * share_fit
    return score, n_dec / dec.shape[1], share


def main():
    params = PayoffParams(sigma=0.0)
    ocfg = OrientationConfig()
    cfg = SynthConfig()
    out = {}
    for cat in TendencyCategory:
        pool = build_pool(300, cat, seed=101, params=params, ocfg=ocfg, cfg=cfg)
        holdout = build_pool(200, cat, seed=202, params=params, ocfg=ocfg, cfg=cfg)
        print(f"{cat.value}: pool {len(pool)}, holdout {len(holdout)}", file=sys.stderr)
        feats = precompute_features(pool, params, ocfg)
        feats_h = precompute_features(holdout, params, ocfg)
        target = TARGET_SHARE[cat.value]
        rng = np.random.default_rng(11)
        cands = rng.uniform(-8, 8, size=(4000, 16))
        score, decf, share = score_candidates(cands, feats, target)
        order = np.argsort(-score)
        elites = cands[order[:12]]
        best = cands[order[0]]
        best_score = score[order[0]]
        for round_ in range(30):
            sigma = 1.2 * (0.93 ** round_)
            perturbed = np.concatenate(
                [e + rng.normal(0, sigma, size=(120, 16)) for e in elites]
            )
            perturbed = np.clip(perturbed, -10, 10)
            cand_block = np.vstack([elites, perturbed])
            score, decf, share = score_candidates(cand_block, feats, target)
            order = np.argsort(-score)
            elites = cand_block[order[:12]]
            if score[order[0]] > best_score:
                best_score = score[order[0]]
                best = cand_block[order[0]]
        s_h, d_h, sh_h = score_candidates(best.reshape(1, -1), feats_h, target)
        print(
            f"{cat.value}: train score {best_score:.3f}; "
            f"holdout decisive {d_h[0]:.3f} share {sh_h[0]:.3f}",
            file=sys.stderr,
        )
        out[cat.value] = {
            "vector": [round(float(x), 4) for x in best],
            "train_score": float(best_score),
            "holdout_decisive": float(d_h[0]),
            "holdout_left_share": float(sh_h[0]),
        }
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
