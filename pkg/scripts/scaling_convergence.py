"""Scaling-limit ratio beta^{-N(N-1)/2} psi_0(beta x) prod j! / h_N(x) as beta grows.

The deviation from 1 falls like 1/beta; beta * (1 - ratio) settles to a constant.
"""
from todakill.whittaker import scaling_ratio

print("N,x,beta,ratio,beta_times_deviation")
for n, x in ((2, (-1.0, 1.0)), (3, (-1.0, 0.0, 1.0)), (3, (-3.0, 0.0, 3.0))):
    for beta in (10.0, 20.0, 30.0, 50.0, 100.0, 200.0):
        r = scaling_ratio(n, x, beta)
        print(f"{n},\"{x}\",{beta:g},{r:.6f},{beta * (1 - r):.4f}")
