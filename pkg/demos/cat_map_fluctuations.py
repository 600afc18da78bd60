"""Fluctuations of ergodic averages along cat-map orbits.

Classifies the cat map, runs exact orbits for a few hundred replicas and
compares the standardized sums of a rectangle indicator against a normal
law, next to an i.i.d. baseline.

    python demos/cat_map_fluctuations.py
"""
from bracketlab import stats as S
from bracketlab.torus import CAT_MAP, IIDProcess, TorusProcess, classify

info = classify(CAT_MAP)
print(f"cat map: ergodic={info.ergodic} hyperbolic={info.hyperbolic} neutral degree={info.neutral_degree}")

f = S.rectangle_indicator([0.0, 0.0], [1 / 3, 1 / 3])
for name, process in [("cat map", TorusProcess(CAT_MAP)), ("iid", IIDProcess(2))]:
    d = S.clt_check(f, process, 10_000, 500, level=0.01, seed=1)
    v = S.variance_estimate(f, process, 10_000, 500, seed=1)
    print(f"{name:8s} sigma^2 = {v.value:.4f} +- {v.se:.4f}   A^2 = {d.ad_statistic:.3f}   p = {d.p_value:.3f}")

# a smooth observable shows its correlations through the lag covariances
ball = S.ball_transition([0.5, 0.5], 0.1, 0.3)
mix = S.covariance_decay(ball, TorusProcess(CAT_MAP), 8, 50_000, 100, seed=2)
for k, c, se in zip(mix.lags, mix.covariances, mix.ses):
    print(f"lag {k}: {c:+.2e} (se {se:.1e})")
print("fitted decay rate:", mix.theta if mix.status == "fitted" else mix.status)
