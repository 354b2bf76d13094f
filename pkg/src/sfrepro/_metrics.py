"""Signal-to-distortion ratio over a weighted point set."""
import numpy as np


def sdr_ratio(u_syn, u_des, weights=None):
    """Raw ratio of desired-field energy to error energy.

    Returns ``inf`` when the error vanishes and ``0`` when the desired field
    vanishes while the error does not.
    """
    u_syn = np.asarray(u_syn)
    u_des = np.asarray(u_des)
    if u_syn.shape != u_des.shape:
        raise ValueError(f"field shapes differ: {u_syn.shape} vs {u_des.shape}")
    w = np.ones(u_des.shape) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != u_des.shape:
        raise ValueError("weights must match the field shape")
    signal = float(np.sum(w * np.abs(u_des) ** 2))
    error = float(np.sum(w * np.abs(u_syn - u_des) ** 2))
    if error == 0.0:
        return np.inf
    return signal / error


def sdr(u_syn, u_des, weights=None):
    """SDR in dB; ``+inf`` for a perfect match, ``-inf`` for a silent target."""
    ratio = sdr_ratio(u_syn, u_des, weights)
    if ratio == 0.0:
        return -np.inf
    return float(10 * np.log10(ratio))
