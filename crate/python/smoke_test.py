"""Smoke test for the tlasso extension module.

Build and install the module first:

    cd crates/python && maturin build --release -o dist && pip install dist/*.whl

then run `python python/smoke_test.py` from the repository root.
"""

import json
import random

import tlasso


def soft(z, t):
    return (abs(z) - t) * (1 if z > 0 else -1) if abs(z) > t else 0.0


def main():
    rng = random.Random(0)
    n, p = 60, 5
    x = [[rng.gauss(0, 1) for _ in range(p)] for _ in range(n)]
    truth = [1.0, -0.5, 0.0, 0.0, 0.8]
    y = [sum(a * b for a, b in zip(row, truth)) + 0.3 * rng.gauss(0, 1) for row in x]

    raw = tlasso.Dataset(x, y)
    assert (raw.n, raw.p) == (n, p)
    d, st = raw.standardize()

    # the scalar update reduces to soft thresholding at alpha = 1
    for z in (-2.0, -0.3, 0.0, 0.4, 1.7):
        assert tlasso.transfer_threshold(z, 0.5, 1.0, 0.9) == soft(z, 0.5)

    lmax = tlasso.lambda_max(d, 1.0)
    at_max = tlasso.fit(d, lmax, 1.0)
    assert all(b == 0.0 for b in at_max.beta), at_max.beta

    lasso = tlasso.fit(d, 0.05, 1.0, tol=1e-10)
    assert lasso.converged and lasso.kkt_residual <= 1e-10

    # with alpha = 0 and a huge penalty the fit stays at the initial estimate
    tilde = lasso.beta
    anchored = tlasso.fit(d, 100.0, 0.0, tilde=tilde)
    assert max(abs(a - b) for a, b in zip(anchored.beta, tilde)) < 1e-12

    lambdas, fits = tlasso.fit_path(d, 0.5, tilde=tilde, n_lambda=20)
    assert len(lambdas) == len(fits) == 20
    assert all(a > b for a, b in zip(lambdas, lambdas[1:]))

    best_alpha, best_lambda, refit = tlasso.cross_validate(d, tilde=tilde, k=5, n_lambda=20)
    beta_raw, intercept = st.to_raw(refit.beta)
    print(f"cv: alpha={best_alpha} lambda={best_lambda:.4g} beta={[round(b, 3) for b in beta_raw]}")

    assert tlasso.auc([True, False, True, False], [0.9, 0.1, 0.4, 0.4]) == 0.875
    assert tlasso.error_bound(1.0, 0.5, 0.1, 3, 1.0, 0.0) > 0.0

    checks = json.loads(tlasso.verify("kkt"))
    assert all(c["passed"] for c in checks), checks

    try:
        tlasso.fit(d, 0.1, 1.5)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha outside [0, 1] must raise")

    print("smoke test passed")


if __name__ == "__main__":
    main()
