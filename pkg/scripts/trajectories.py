"""Print how the lower-bound families approach their polynomial ceilings as m grows."""
import argparse
import math

from nswlb.bounds import poly_bounds
from nswlb.generators import generate

p = argparse.ArgumentParser()
p.add_argument("--p", type=int, default=1)
p.add_argument("--ms", type=int, nargs="+", default=[3, 5, 10, 20, 40])
args = p.parse_args()

b = poly_bounds(args.p)
rows = [
    ("weightedLB", lambda m: generate("weightedLB", m=m, p=args.p), b["weightedNpoa"]),
    ("unweightedLB", lambda m: generate("unweightedLB", m=m, k=1, o=1, p=args.p), b["unweightedNpoa"]),
    ("onlineGreedyLB", lambda m: generate("onlineGreedyLB", m=m, k=1, h=0, p=args.p), b["greedyCr"]),
]
print(f"{'family':<16}{'m':>5}{'measured':>14}{'predicted':>14}{'ceiling':>10}")
for name, make, ceiling in rows:
    for m in args.ms:
        inst = make(m)
        print(f"{name:<16}{m:>5}{inst.measured_ratio():>14.9f}{inst.predicted_ratio:>14.9f}{ceiling:>10.4g}")
na = generate("nonAtomic", p=args.p)
print(f"{'nonAtomic':<16}{'-':>5}{na.measured_ratio():>14.9f}{math.exp(args.p / math.e):>14.9f}"
      f"{b['nonatomicNpoa']:>10.4g}")
