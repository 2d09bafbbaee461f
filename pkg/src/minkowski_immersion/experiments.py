"""Stability experiments: perturb the input, reconstruct, align, report gap ratios."""
from __future__ import annotations

import numpy as np

from .alignment import align_hypersurface, align_manifold
from .errors import BadParams
from .fixtures import default_chart, generate
from .grid import TensorField
from .hypersurface import FundamentalForms, immerse_hypersurface_forms
from .manifold import immerse_manifold

__all__ = ["smooth_direction", "stability_table", "STABILITY_FIXTURES"]

STABILITY_FIXTURES = ("rindler", "hyperboloid_forms")


def smooth_direction(chart, comp, seed):
    """Seeded symmetric perturbation direction: affine in the coordinates, max entry 1."""
    rng = np.random.default_rng(seed)
    X = chart.mesh()
    n = comp
    coef = rng.uniform(-1.0, 1.0, size=(chart.dim + 1, n, n))
    coef = 0.5 * (coef + np.swapaxes(coef, 1, 2))
    P = np.broadcast_to(coef[0], chart.shape + (n, n)).copy()
    for a, x in enumerate(X):
        P += x[..., None, None] * coef[a + 1]
    return P / np.max(np.abs(P))


def stability_table(fixture, samples=33, deltas=(1e-2, 1e-3, 1e-4), seed=0, direction="scale",
                    epsilon=0.2, p=None):
    """Gap ratios for a family of perturbations of a fixture.

    rindler perturbs the metric (g -> g + delta * P); hyperboloid_forms
    perturbs the second form (K -> K + delta * P).  P is the unperturbed
    field itself for ``direction="scale"`` and a seeded smooth field for
    ``direction="random"``.  Returns a dict with one row per delta and the
    spread max(ratio) / min(ratio).
    """
    if fixture not in STABILITY_FIXTURES:
        raise BadParams("stability runs on rindler or hyperboloid_forms", fixture=fixture)
    if direction not in ("scale", "random"):
        raise BadParams("direction must be 'scale' or 'random'", direction=direction)
    chart = default_chart(fixture, samples)
    fields, meta = generate(fixture, {}, chart)
    rows = []
    if fixture == "rindler":
        g = fields["g"]
        P = g.data if direction == "scale" else smooth_direction(chart, 2, seed)
        base = immerse_manifold(g, epsilon=epsilon)
        for delta in deltas:
            gt = TensorField(chart, g.data + delta * P, ((0, 1),))
            res = align_manifold(base, immerse_manifold(gt, epsilon=epsilon), g, gt, p, epsilon)
            rows.append(_row(delta, res))
    else:
        forms = FundamentalForms(chart, fields["g"], fields["K"], meta["lambda"])
        P = forms.K.data if direction == "scale" else smooth_direction(chart, 2, seed)
        base = immerse_hypersurface_forms(forms, epsilon=epsilon)
        for delta in deltas:
            ft = FundamentalForms(chart, forms.g, forms.K.data + delta * P, forms.lam)
            rt = immerse_hypersurface_forms(ft, epsilon=epsilon)
            res = align_hypersurface(base, rt, p=p, proper_required=True, forms1=forms, forms2=ft,
                                     epsilon=epsilon)
            rows.append(_row(delta, res))
    ratios = [r["ratio"] for r in rows]
    return {
        "fixture": fixture,
        "samples": samples,
        "direction": direction,
        "seed": seed,
        "rows": rows,
        "ratio_spread": max(ratios) / min(ratios) if min(ratios) > 0 else float("inf"),
    }


def _row(delta, res):
    return {
        "delta": delta,
        "aligned_gap_w2p": res.aligned_gap_w2p,
        "aligned_gap_max": res.aligned_gap_max,
        "input_gap": res.input_gap,
        "ratio": res.ratio,
    }
