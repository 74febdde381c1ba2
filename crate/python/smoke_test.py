"""Smoke test for the bsreg extension module.

Build it first, for example with
    maturin develop -m crates/python/Cargo.toml --features extension-module
or by copying target/release/libbsreg.so to bsreg.so on PYTHONPATH.
"""

import math
import random

import bsreg


def simulated_data(n=40, alpha=0.5, seed=1):
    rng = random.Random(seed)
    rows, y = [], []
    for _ in range(n):
        x = [1.0, rng.random(), rng.random(), rng.random()]
        eps = 2.0 * math.asinh(alpha * rng.gauss(0.0, 1.0) / 2.0)
        y.append(1.0 + 2.0 * x[1] + eps)
        rows.append(x)
    return bsreg.Dataset(y, rows, ["intercept", "load", "temp", "noise"])


def main():
    d = simulated_data()
    assert (d.n, d.p) == (40, 4)

    f = d.fit()
    assert abs(f.beta[1] - 2.0) < 1.0, f
    assert 0.2 < f.alpha < 1.0, f
    assert all(se > 0 for se in f.std_errors)

    r = d.test("temp=0,noise=0", method="sr-star")
    assert r.df == 2 and r.corrected is not None
    assert r.restricted_beta[2] == 0.0 and r.restricted_beta[3] == 0.0
    assert [lvl for lvl, _ in r.decisions] == [0.10, 0.05]

    sh = d.test("b3=0,b4=0", method="sh")
    assert sh.statistic == r.statistic

    boot = d.test("alpha=0.5", method="boot", bootstrap_b=200, seed=3)
    assert 0.0 <= boot.p_value <= 1.0

    try:
        d.test("b9=0")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown coefficient accepted")

    c = bsreg.alpha_constants(1.0)
    assert abs(c["a0"] - 0.336204002446341) < 1e-12
    assert abs(c["g2"] + 0.75 * c["g1"]) < 1e-12
    assert abs(bsreg.chi2_quantile(0.90, 2) - 4.605170185988091) < 1e-9
    assert abs(bsreg.chi2_sf(4.605170185988091, 2) - 0.10) < 1e-12

    cfg = bsreg.ExperimentConfig(n=20, p=3, q=1, alpha=0.5, replications=300, seed=7, tests="lr,sr,sr*")
    res = cfg.run()
    assert res.replications + res.failed == 300
    assert {t for t, _, _, _ in res.rates} == {"LR", "SR", "SR*"}
    again = bsreg.ExperimentConfig.from_config_str(cfg.to_config_string()).run()
    assert again.rates == res.rates

    cells = bsreg.table_cells("2", replications=100)
    assert [c.to_config_string().splitlines()[0] for c in cells][0] == "n = 15"

    print("bsreg smoke test passed")


if __name__ == "__main__":
    main()
