"""Pure numpy implementation of the tilted-bank reductions.

Used when the compiled ``_tilt`` extension is unavailable, and as the
reference the extension is tested against.
"""

import numpy as np


def _shifted_weights(g, beta):
    bg = beta * g
    shift = bg.max()
    return np.exp(bg - shift), shift


def tilt_stats(g, beta):
    """Moments of ``g`` under weights ``exp(beta * g)``.

    Returns ``(log_mean_w, mean, var, ess, se_log_mean_w, se_mean)`` where
    ``log_mean_w`` is ``log(mean(exp(beta * g)))``.
    """
    g = np.asarray(g, dtype=np.float64)
    n = g.shape[0]
    w, shift = _shifted_weights(g, beta)
    s0 = w.sum()
    mean = (w * g).sum() / s0
    d = g - mean
    var = (w * d * d).sum() / s0
    w2 = w * w
    ess = s0 * s0 / w2.sum()
    se_mean = np.sqrt((w2 * d * d).sum()) / s0
    wbar = s0 / n
    if n > 1:
        dw = w - wbar
        se_log = np.sqrt((dw * dw).sum() / (n * (n - 1.0))) / wbar
    else:
        se_log = 0.0
    log_mean = shift + np.log(wbar)
    return float(log_mean), float(mean), float(var), float(ess), float(se_log), float(se_mean)


def tilt_means(points, g, beta):
    """Self-normalised weighted column means of ``points`` and their stderrs."""
    points = np.asarray(points, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    w, _ = _shifted_weights(g, beta)
    s0 = w.sum()
    means = (w @ points) / s0
    d = points - means
    se = np.sqrt((w * w) @ (d * d)) / s0
    return means, se
