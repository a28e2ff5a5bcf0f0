"""Pure numpy versions of the fiber kernels.

A *fiber* is the set of positions ``p`` sharing the same ``index[p]``; in
practice ``index`` maps each admissible word ``a w`` to the position of its
shift ``w`` one depth lower, so a fiber is a preimage set of the shift.
"""
import numpy as np


def fiber_sum(values, index, n_out):
    """Scatter-add ``values`` into ``n_out`` fibers.

    Parameters
    ----------
    values : array_like, shape (n,) or (n, k)
    index : array_like of int, shape (n,)
        Fiber label of each row, in ``[0, n_out)``.
    n_out : int

    Returns
    -------
    ndarray of complex, shape (n_out,) or (n_out, k)
    """
    v = np.asarray(values, dtype=np.complex128)
    idx = np.asarray(index, dtype=np.intp)
    if idx.shape[0] != v.shape[0]:
        raise ValueError("index length does not match values")
    if idx.size and (idx.min() < 0 or idx.max() >= n_out):
        raise IndexError("fiber index out of range")
    out = np.zeros((n_out,) + v.shape[1:], dtype=np.complex128)
    np.add.at(out, idx, v)
    return out


def fiber_gram_schmidt(gens, weights, index, n_out, drop_tol=1e-12):
    """Orthonormalize generator vectors fiber by fiber.

    On every fiber the inner product is ``sum_p u[p] conj(v[p]) weights[p]``.
    Generators are processed in row order with two classical Gram-Schmidt
    passes; a generator whose residual on a fiber falls below ``drop_tol``
    times its original fiber norm is set to zero there.

    Returns
    -------
    q : ndarray, shape (L, n)
    ranks : ndarray of int, shape (n_out,)
        Number of surviving generators per fiber.
    """
    q = np.array(gens, dtype=np.complex128, copy=True)
    wt = np.asarray(weights, dtype=np.float64)
    idx = np.asarray(index, dtype=np.intp)
    ranks = np.zeros(n_out, dtype=np.intp)
    for i in range(q.shape[0]):
        orig = np.sqrt(fiber_sum(np.abs(q[i]) ** 2 * wt, idx, n_out).real)
        for _ in range(2):
            for j in range(i):
                coef = fiber_sum(q[i] * q[j].conj() * wt, idx, n_out)
                q[i] -= coef[idx] * q[j]
        res = np.sqrt(fiber_sum(np.abs(q[i]) ** 2 * wt, idx, n_out).real)
        keep = (res > drop_tol * orig) & (res > 0.0)
        ranks += keep
        scale = np.where(keep, 1.0 / np.where(keep, res, 1.0), 0.0)
        q[i] *= scale[idx]
    return q, ranks
