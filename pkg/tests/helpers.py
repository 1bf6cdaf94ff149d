"""Shared test utilities: synthetic images and the finite-difference oracle."""

import numpy as np

from ardis import autodiff as ad


def synth_image(rng, h, w):
    """Smooth random test image: mixed gradients and sinusoids per channel."""
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    img = np.zeros((h, w, 3))
    for c in range(3):
        f = rng.uniform(1.0, 6.0, 2)
        ph = rng.uniform(0, 2 * np.pi, 2)
        img[:, :, c] = (rng.uniform(0.2, 0.8)
                        + 0.3 * np.sin(2 * np.pi * f[0] * yy + ph[0])
                        * np.cos(2 * np.pi * f[1] * xx + ph[1])
                        + 0.2 * (rng.uniform(-1, 1) * yy + rng.uniform(-1, 1) * xx))
    lo, hi = img.min(), img.max()
    return (img - lo) / (hi - lo)


def numeric_grad(build, tensor, idx, h=1e-5):
    """Central finite difference of a scalar-loss builder at one entry.

    The builder must recompute the loss from scratch so the probe stays
    independent of the autodiff path it is checking.
    """
    old = tensor.data[idx]
    tensor.data[idx] = old + h
    fp = build().item()
    tensor.data[idx] = old - h
    fm = build().item()
    tensor.data[idx] = old
    return (fp - fm) / (2.0 * h)


def gradcheck(build, tensors, rng, probes_per_tensor=4, h=1e-5):
    """Max relative error between analytic and numeric gradients.

    Probes a random subset of entries of each tensor; relative error is
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).

    Central differences are only valid where the loss is smooth across
    the probe interval; a relu kink inside [p-h, p+h] makes the secant
    meaningless even though the analytic one-sided gradient is correct.
    Such probes are detected by comparing the secant at h with the one
    at h/100 (they agree to O(h^2) on smooth losses and disagree at
    O(1) across a kink) and skipped.
    """
    loss = build()
    ad.backward(loss)
    analytic = {id(t): t.grad.copy() for t in tensors}
    worst = 0.0
    checked = 0
    for t in tensors:
        entries = [tuple(i) for i in np.ndindex(t.data.shape)]
        k = min(probes_per_tensor, len(entries))
        picks = [entries[i] for i in rng.choice(len(entries), size=k, replace=False)]
        for idx in picks:
            num = numeric_grad(build, t, idx, h)
            num_fine = numeric_grad(build, t, idx, h / 100.0)
            if abs(num - num_fine) > 1e-3 * max(abs(num), abs(num_fine), 1e-6):
                continue  # kink inside the probe interval
            ana = analytic[id(t)][idx]
            worst = max(worst, abs(ana - num) / max(abs(ana), abs(num), 1e-6))
            checked += 1
    assert checked > 0, "every probe hit a nonsmooth point; enlarge the probe set"
    return worst
