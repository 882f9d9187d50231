#!/usr/bin/env python3
"""Mean mIoU and median q_H under truncation plus jitter.

    python3 scripts/sanity_band.py --seeds 20 --truncate 4 --jitter 1
"""

import argparse
import json

import numpy as np

from roofvec.metrics import evaluate
from roofvec.pipeline import run_building
from roofvec.synth import CorruptionSpec, corrupt, synthetic_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--truncate", type=float, default=4.0)
    ap.add_argument("--jitter", type=float, default=1.0)
    ap.add_argument("--rotate", action="store_true")
    args = ap.parse_args()

    reports = {}
    for case in synthetic_suite(range(args.seeds), rotate=args.rotate):
        noisy = corrupt(case.edges, CorruptionSpec(args.truncate, args.jitter, seed=case.template.seed))
        res = run_building(noisy, case.image_size)
        reports.setdefault(case.template.kind, []).append(evaluate(res.faces, case.truth, case.image_size))
    out = {}
    for kind, reps in reports.items():
        out[kind] = {"mean_miou": float(np.mean([r.miou for r in reps])), "median_q_h": float(np.median([r.q_h for r in reps]))}
        print(f"{kind:<12} mean mIoU {out[kind]['mean_miou']:.4f}  median q_H {out[kind]['median_q_h']:.4f}")
    allr = [r for reps in reports.values() for r in reps]
    out["all"] = {"mean_miou": float(np.mean([r.miou for r in allr])), "median_q_h": float(np.median([r.q_h for r in allr]))}
    print(f"{'all':<12} mean mIoU {out['all']['mean_miou']:.4f}  median q_H {out['all']['median_q_h']:.4f}")
    print(json.dumps(out))


if __name__ == "__main__":
    main()
