"""Binary node codes: plain sign binarization and rotation-optimized codes.

Rotating the embedding by any orthogonal matrix leaves the training objective
unchanged, so the rotation is a free parameter that can be spent on shrinking
the gap between the embedding and its binary code. The alternation below
fixes the codes given the rotation (entrywise sign) and the rotation given
the codes (an orthogonal Procrustes solve), each step an exact minimizer.
"""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class BinaryCodes:
    codes: np.ndarray        # (n, d) entries exactly -1 or +1
    rotation: np.ndarray     # (d, d) orthogonal
    quant_loss: float        # squared distance between codes and rotated embedding
    loss_trace: list = field(default_factory=list)


def _sign_pm1(M):
    # ties at zero resolve to +1, everywhere
    return np.where(M >= 0.0, 1.0, -1.0)


def _quant_loss(C, Y, Q):
    diff = C - Y @ Q
    return float(np.sum(diff * diff))


def procrustes_rotation(Y, C):
    """Orthogonal Q minimizing the distance between C and Y Q."""
    U, _, Vt = np.linalg.svd(Y.T @ C)
    return U @ Vt


def binarize_sign(Y):
    """Entrywise sign codes with the identity rotation."""
    Y = np.asarray(Y, dtype=np.float64)
    if not np.all(np.isfinite(Y)):
        raise ValueError("embedding has non-finite entries")
    C = _sign_pm1(Y)
    loss = _quant_loss(C, Y, np.eye(Y.shape[1]))
    return BinaryCodes(C, np.eye(Y.shape[1]), loss, [loss])


def itq(Y, iterations=50, seed=None, tol=1e-10, initial_rotation=None):
    """Alternating code/rotation optimization of the quantization error.

    Starts from the identity rotation (a seeded random orthogonal one when
    ``seed`` is given, or an explicit ``initial_rotation``) and stops after
    ``iterations`` rounds or once the loss improves by less than ``tol``.
    Each half-step is an exact minimizer, so the loss trace is non-increasing;
    a round that fails to improve due to rounding noise is discarded. The
    returned codes are the exact signs of the rotated embedding.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if not np.all(np.isfinite(Y)):
        raise ValueError("embedding has non-finite entries")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    d = Y.shape[1]
    if initial_rotation is not None:
        Q = np.asarray(initial_rotation, dtype=np.float64)
        if Q.shape != (d, d) or np.linalg.norm(Q.T @ Q - np.eye(d)) > 1e-8:
            raise ValueError("initial_rotation must be a d x d orthogonal matrix")
    elif seed is None:
        Q = np.eye(d)
    else:
        rng = np.random.default_rng(seed)
        Q, R = np.linalg.qr(rng.standard_normal((d, d)))
        Q = Q * np.sign(np.diag(R))  # fix the sign convention
    C = _sign_pm1(Y @ Q)
    loss = _quant_loss(C, Y, Q)
    trace = [loss]
    for _ in range(iterations):
        Q_next = procrustes_rotation(Y, C)
        C_next = _sign_pm1(Y @ Q_next)
        new_loss = _quant_loss(C_next, Y, Q_next)
        if new_loss > loss:
            # analytically impossible, so this is rounding noise at a fixed point
            break
        C, Q = C_next, Q_next
        trace.append(new_loss)
        converged = loss - new_loss < tol
        loss = new_loss
        if converged:
            break
    return BinaryCodes(C, Q, loss, trace)


def pack_codes(C):
    """Pack one code row per output row: bit j of row i is (C_ij + 1) / 2.

    Bits fill each byte least-significant first and rows are zero-padded to
    a whole number of bytes.
    """
    C = np.asarray(C)
    if not np.isin(C, (-1.0, 1.0)).all():
        raise ValueError("codes must contain only -1 and +1")
    bits = ((C + 1) // 2).astype(np.uint8)
    return np.packbits(bits, axis=1, bitorder="little")


def unpack_codes(packed, dim):
    """Inverse of pack_codes for a known code length."""
    bits = np.unpackbits(np.asarray(packed, dtype=np.uint8), axis=1,
                         count=dim, bitorder="little")
    return bits.astype(np.float64) * 2.0 - 1.0
