"""Reference algebra for the constant-kernel Gaussian system.

With kernel K = c, the covariance matrix over cells of widths w_i is
c * w w^T: rank one, single eigenvalue c * |w|^2.  On 2^m equal cells of the
unit interval the two tracked statistics are exactly

    sum_i sqrt(Sigma_ii) = sqrt(c) * sum w_i = sqrt(c)
    (#cells) * tau_max   = 2^m * c * 2^m * 4^-m = c

and every sample is a common N(0, c) multiple of cell widths.  Verified here
against numpy's eigendecomposition of the literal matrix.

Run:  python constant_kernel_reference.py
"""

import numpy as np

if __name__ == "__main__":
    c = 2.5
    for m in (2, 5, 8):
        w = np.full(2**m, 2.0**-m)
        sigma = c * np.outer(w, w)
        evals = np.linalg.eigvalsh(sigma)
        tau = evals[-1]
        print(f"m={m}: rank={np.sum(evals > 1e-12 * tau)}  "
              f"weak={np.sqrt(np.diag(sigma)).sum():.12f} (sqrt(c)={np.sqrt(c):.12f})  "
              f"cells*tau={len(w) * tau:.12f} (c={c})")
